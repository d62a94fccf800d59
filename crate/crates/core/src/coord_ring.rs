//! The graded ring `B_g(θ, τ) = ⊕_{n≥0} R_{gⁿ}` of holomorphic vectors.
//!
//! `R_{gⁿ}` has basis `f_{τ,n} ⊗ δ_j`, `j ∈ ℤ/c_nℤ`; degree 0 is `ℂ·1`.
//! Products go through [`balanced_product`] followed by a least-squares
//! expansion in the target basis.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::heis_module::{balanced_product, BalanceOptions, Level, ModuleElement};
use crate::qfield::RmData;
use crate::theta::{theta_const, ThetaQuery};

/// `dim R_{gⁿ}`: `c_n` for `n ≥ 1` and 1 for the unit piece.
pub fn piece_dim(n: u32, data: &RmData) -> Result<usize> {
    if n == 0 {
        return Ok(1);
    }
    let gn = data.g.pow(n)?;
    usize::try_from(gn.c).map_err(|_| Error::domain(format!("{gn} has c ≤ 0")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradedPiece {
    pub degree: u32,
    pub dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaGrid {
    /// Denominators of `r` run up to `b_factor · c_{m+n}`.
    pub b_factor: usize,
    /// `l` runs up to `l_factor · c_{m+n}`.
    pub l_factor: usize,
}

impl Default for ThetaGrid {
    fn default() -> Self {
        ThetaGrid {
            b_factor: 3,
            l_factor: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RingOptions {
    /// Truncation tolerance of the lattice sums.
    pub tol: f64,
    /// Expansion residuals above this are flagged.
    pub residual_tol: f64,
    /// Relative singular-value cutoff for generation ranks.
    pub rank_tol: f64,
    /// Relative singular-value cutoff for the quadraticity check.
    pub quad_tol: f64,
    pub condition_limit: f64,
    /// Degree pairs whose structure tensors get a theta diagnostic.
    pub theta_diagnostic: Vec<(u32, u32)>,
    pub theta_grid: ThetaGrid,
}

impl Default for RingOptions {
    fn default() -> Self {
        RingOptions {
            tol: crate::heis_module::DEFAULT_TOL,
            residual_tol: 1e-8,
            rank_tol: 1e-8,
            quad_tol: 1e-7,
            condition_limit: crate::heis_module::DEFAULT_CONDITION_LIMIT,
            theta_diagnostic: vec![(1, 1)],
            theta_grid: ThetaGrid::default(),
        }
    }
}

/// Homogeneous element coefficients by degree.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RingElement {
    pub pieces: BTreeMap<u32, Vec<Complex64>>,
}

impl RingElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::homogeneous(0, vec![Complex64::new(1.0, 0.0)])
    }

    pub fn homogeneous(degree: u32, coeffs: Vec<Complex64>) -> Self {
        let mut pieces = BTreeMap::new();
        pieces.insert(degree, coeffs);
        RingElement { pieces }
    }

    pub fn piece(&self, degree: u32) -> Option<&[Complex64]> {
        self.pieces.get(&degree).map(Vec::as_slice)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&d, v) in &other.pieces {
            let slot = out.pieces.entry(d).or_insert_with(|| vec![Complex64::default(); v.len()]);
            if slot.len() < v.len() {
                slot.resize(v.len(), Complex64::default());
            }
            for (a, b) in slot.iter_mut().zip(v) {
                *a += b;
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        RingElement {
            pieces: self
                .pieces
                .iter()
                .map(|(&d, v)| (d, v.iter().map(|x| x * s).collect()))
                .collect(),
        }
    }

    /// Euclidean norm over all pieces.
    pub fn norm(&self) -> f64 {
        self.pieces
            .values()
            .flat_map(|v| v.iter())
            .map(|x| x.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.add(&other.scale(Complex64::new(-1.0, 0.0))).norm()
    }
}

/// Best match of a tensor entry against `ϑ_{a/b}(lτ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaMatch {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub value: Complex64,
    /// `(a, b)` with `r = a/b`.
    pub r: (i64, i64),
    pub l: u64,
    pub theta: Complex64,
    /// `|value − ϑ| / |ϑ|`.
    pub rel_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaDiagnostic {
    pub b_max: usize,
    pub l_max: usize,
    /// Entries with `rel_gap < 1e-8`.
    pub matched: usize,
    pub nonzero: usize,
    pub entries: Vec<ThetaMatch>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureTensor {
    pub m: u32,
    pub n: u32,
    /// `[c_{m+n}, c_m, c_n]`.
    pub shape: [usize; 3],
    /// Row-major `T[k][i][j]`: `(f⊗δ_i)(f⊗δ_j) = Σ_k T[k][i][j] f⊗δ_k`.
    #[serde(skip)]
    pub entries: Vec<Complex64>,
    /// Expansion residual for each input pair `(i, j)`, row-major.
    #[serde(skip)]
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub max_tail_bound: f64,
    /// Pairs whose residual exceeded the configured tolerance.
    pub flagged: Vec<(usize, usize)>,
    pub theta_diagnostic: Option<ThetaDiagnostic>,
}

impl StructureTensor {
    pub fn get(&self, k: usize, i: usize, j: usize) -> Complex64 {
        let [_, a, b] = self.shape;
        self.entries[(k * a + i) * b + j]
    }

    /// The multiplication map `R_m ⊗ R_n → R_{m+n}` as a `c_{m+n} × c_m c_n`
    /// matrix, columns indexed by `i·c_n + j`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let [c3, c1, c2] = self.shape;
        DMatrix::from_fn(c3, c1 * c2, |k, col| self.get(k, col / c2, col % c2))
    }

    /// `Σ_{i,j} T[k][i][j] u_i v_j`.
    pub fn contract(&self, u: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        let [c3, c1, c2] = self.shape;
        (0..c3)
            .map(|k| {
                let mut s = Complex64::default();
                for (i, ui) in u.iter().enumerate().take(c1) {
                    for (j, vj) in v.iter().enumerate().take(c2) {
                        s += self.get(k, i, j) * ui * vj;
                    }
                }
                s
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationStep {
    /// Map `R_1 ⊗ R_n → R_{n+1}`.
    pub n: u32,
    pub source_dim: usize,
    pub target_dim: usize,
    /// `None` when the dimension count alone rules generation out.
    pub rank: Option<usize>,
    pub generated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationReport {
    pub steps: Vec<GenerationStep>,
    pub generated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticReport {
    pub verdict: Verdict,
    /// `dim ker(R_1⊗R_1 → R_2)`.
    pub kernel_dim: Option<usize>,
    /// `rank(K⊗R_1 + R_1⊗K)`.
    pub relation_span: Option<usize>,
    /// `dim ker(R_1⊗R_1⊗R_1 → R_3)`.
    pub degree3_kernel_dim: Option<usize>,
    /// `‖M₃ S‖/‖M₃‖‖S‖` for the spanning set `S` of degree-3 relations.
    pub containment_residual: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RingReport {
    pub dims: Vec<usize>,
    pub generation: Vec<bool>,
    pub quadratic: bool,
    pub assoc_residual: f64,
    pub tensors: Vec<StructureTensor>,
    pub generation_ranks: Vec<Option<usize>>,
    pub quadratic_report: QuadraticReport,
}

/// `B_g(θ, τ)` with cached structure tensors.
pub struct CoordinateRing {
    data: RmData,
    tau: Complex64,
    opts: RingOptions,
    levels: Mutex<HashMap<u32, Arc<Level>>>,
    tensors: Mutex<HashMap<(u32, u32), Arc<StructureTensor>>>,
}

impl CoordinateRing {
    pub fn new(data: RmData, tau: Complex64, opts: RingOptions) -> Result<Self> {
        if tau.im <= 0.0 || !tau.im.is_finite() {
            return Err(Error::domain(format!("Im(τ) = {} must be positive", tau.im)));
        }
        Ok(CoordinateRing {
            data,
            tau,
            opts,
            levels: Mutex::new(HashMap::new()),
            tensors: Mutex::new(HashMap::new()),
        })
    }

    pub fn data(&self) -> &RmData {
        &self.data
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn options(&self) -> &RingOptions {
        &self.opts
    }

    pub fn piece(&self, n: u32) -> Result<GradedPiece> {
        Ok(GradedPiece {
            degree: n,
            dim: piece_dim(n, &self.data)?,
        })
    }

    fn level(&self, n: u32) -> Result<Arc<Level>> {
        let mut cache = self.levels.lock().expect("level cache");
        if let Some(l) = cache.get(&n) {
            return Ok(l.clone());
        }
        let l = Level::new(&self.data, n)?;
        cache.insert(n, l.clone());
        Ok(l)
    }

    fn balance_options(&self) -> BalanceOptions {
        BalanceOptions {
            tol: self.opts.tol,
            tau: Some(self.tau),
            poly_degree: 0,
            condition_limit: self.opts.condition_limit,
        }
    }

    /// `Σ_j u_j f_{τ,n} ⊗ δ_j`.
    pub fn to_module(&self, n: u32, coeffs: &[Complex64]) -> Result<ModuleElement> {
        let level = self.level(n)?;
        if coeffs.len() as i64 != level.modulus() {
            return Err(Error::domain(format!(
                "degree {n} needs {} coefficients, got {}",
                level.modulus(),
                coeffs.len()
            )));
        }
        let f = level.holomorphic_vector(self.tau)?;
        let mut x = ModuleElement::zero(level.clone());
        for (j, &w) in coeffs.iter().enumerate() {
            if w != Complex64::default() {
                x = x.add(&ModuleElement::basis(level.clone(), f.scale(w), j as i64))?;
            }
        }
        Ok(x)
    }

    /// Product of homogeneous pieces, with its expansion residual.
    fn mult_pieces(
        &self,
        m: u32,
        u: &[Complex64],
        n: u32,
        v: &[Complex64],
    ) -> Result<(Vec<Complex64>, f64)> {
        if m == 0 || n == 0 {
            let (s, w) = if m == 0 { (u[0], v) } else { (v[0], u) };
            return Ok((w.iter().map(|x| x * s).collect(), 0.0));
        }
        let p = balanced_product(&self.to_module(m, u)?, &self.to_module(n, v)?, &self.balance_options())?;
        let ex = p.expansion.expect("expansion requested");
        Ok((ex.coeffs.iter().map(|c| c[0]).collect(), ex.residual))
    }

    /// `u·v`, degree by degree; the second value is the largest expansion
    /// residual met.
    pub fn mult(&self, u: &RingElement, v: &RingElement) -> Result<(RingElement, f64)> {
        let mut out = RingElement::zero();
        let mut residual: f64 = 0.0;
        for (&m, a) in &u.pieces {
            for (&n, b) in &v.pieces {
                let (w, r) = self.mult_pieces(m, a, n, b)?;
                residual = residual.max(r);
                out = out.add(&RingElement::homogeneous(m + n, w));
            }
        }
        Ok((out, residual))
    }

    /// Structure constants of `R_m ⊗ R_n → R_{m+n}` in the `δ` bases.
    pub fn structure_tensor(&self, m: u32, n: u32) -> Result<Arc<StructureTensor>> {
        if m == 0 || n == 0 {
            return Err(Error::domain("structure tensors need degrees m, n ≥ 1"));
        }
        if let Some(t) = self.tensors.lock().expect("tensor cache").get(&(m, n)) {
            return Ok(t.clone());
        }
        let (l1, l2) = (self.level(m)?, self.level(n)?);
        let (c1, c2) = (l1.modulus() as usize, l2.modulus() as usize);
        let c3 = piece_dim(m + n, &self.data)?;
        let mut entries = vec![Complex64::default(); c3 * c1 * c2];
        let mut residuals = vec![0.0; c1 * c2];
        let mut flagged = Vec::new();
        let mut max_tail: f64 = 0.0;
        let opts = self.balance_options();
        for i in 0..c1 {
            let x = ModuleElement::holomorphic_basis(l1.clone(), self.tau, i as i64)?;
            for j in 0..c2 {
                let y = ModuleElement::holomorphic_basis(l2.clone(), self.tau, j as i64)?;
                let p = balanced_product(&x, &y, &opts)?;
                let ex = p.expansion.expect("expansion requested");
                for k in 0..c3 {
                    entries[(k * c1 + i) * c2 + j] = ex.coeffs[k][0];
                }
                residuals[i * c2 + j] = ex.residual;
                if ex.residual > self.opts.residual_tol {
                    flagged.push((i, j));
                }
                max_tail = max_tail.max(p.tail_bound);
            }
        }
        let mut t = StructureTensor {
            m,
            n,
            shape: [c3, c1, c2],
            max_residual: residuals.iter().copied().fold(0.0, f64::max),
            entries,
            residuals,
            max_tail_bound: max_tail,
            flagged,
            theta_diagnostic: None,
        };
        if self.opts.theta_diagnostic.contains(&(m, n)) {
            t.theta_diagnostic = Some(theta_diagnostic(&t, self.tau, self.opts.theta_grid)?);
        }
        let t = Arc::new(t);
        self.tensors.lock().expect("tensor cache").insert((m, n), t.clone());
        Ok(t)
    }

    /// Ranks of `R_1 ⊗ R_n → R_{n+1}` for `1 ≤ n < max_degree`.
    pub fn check_generation(&self, max_degree: u32) -> Result<GenerationReport> {
        let c1 = piece_dim(1, &self.data)?;
        let mut steps = Vec::new();
        for n in 1..max_degree {
            let source = c1 * piece_dim(n, &self.data)?;
            let target = piece_dim(n + 1, &self.data)?;
            if source < target {
                steps.push(GenerationStep {
                    n,
                    source_dim: source,
                    target_dim: target,
                    rank: None,
                    generated: false,
                });
                continue;
            }
            let t = self.structure_tensor(1, n)?;
            let r = numerical_rank(&t.matrix(), self.opts.rank_tol);
            steps.push(GenerationStep {
                n,
                source_dim: source,
                target_dim: target,
                rank: Some(r),
                generated: r == target,
            });
        }
        let generated = steps.iter().all(|s| s.generated);
        Ok(GenerationReport { steps, generated })
    }

    /// Degree-3 quadraticity: relations `K⊗R_1 + R_1⊗K` span the kernel of
    /// `R_1^{⊗3} → R_3`.
    pub fn check_quadratic(&self) -> Result<QuadraticReport> {
        let na = |note: &str| QuadraticReport {
            verdict: Verdict::NotApplicable,
            kernel_dim: None,
            relation_span: None,
            degree3_kernel_dim: None,
            containment_residual: None,
            note: Some(note.to_string()),
        };
        let gen = self.check_generation(2)?;
        if !gen.generated {
            return Ok(na("degree-1 generation fails"));
        }
        let c1 = piece_dim(1, &self.data)?;
        let t11 = match self.structure_tensor(1, 1) {
            Ok(t) => t,
            Err(e) if e.is_conditioning() => return Ok(inconclusive(e)),
            Err(e) => return Err(e),
        };
        let t21 = match self.structure_tensor(2, 1) {
            Ok(t) => t,
            Err(e) if e.is_conditioning() => return Ok(inconclusive(e)),
            Err(e) => return Err(e),
        };
        let m2 = t11.matrix();
        let kernel = null_space(&m2, self.opts.quad_tol);
        let dk = kernel.ncols();

        // M₃[k, (i,j,h)] = Σ_l T21[k][l][h]·T11[l][i][j]
        let [c3, c2, _] = t21.shape;
        let n3 = c1 * c1 * c1;
        let mut m3 = DMatrix::<Complex64>::zeros(c3, n3);
        for k in 0..c3 {
            for i in 0..c1 {
                for j in 0..c1 {
                    for h in 0..c1 {
                        let mut s = Complex64::default();
                        for l in 0..c2 {
                            s += t21.get(k, l, h) * t11.get(l, i, j);
                        }
                        m3[(k, i * c1 * c1 + j * c1 + h)] = s;
                    }
                }
            }
        }
        let mut s = DMatrix::<Complex64>::zeros(n3, 2 * dk * c1);
        let one = Complex64::new(1.0, 0.0);
        for a in 0..dk {
            for h in 0..c1 {
                let col = a * c1 + h;
                for ij in 0..c1 * c1 {
                    // K ⊗ R_1
                    s[(ij * c1 + h, col)] += kernel[(ij, a)] * one;
                }
                let col = dk * c1 + a * c1 + h;
                for jk in 0..c1 * c1 {
                    // R_1 ⊗ K
                    s[(h * c1 * c1 + jk, col)] += kernel[(jk, a)] * one;
                }
            }
        }
        let span = numerical_rank(&s, self.opts.quad_tol);
        let rank3 = numerical_rank(&m3, self.opts.quad_tol);
        let ker3 = n3 - rank3;
        let prod = &m3 * &s;
        let denom = m3.norm() * s.norm();
        let containment = if denom > 0.0 { prod.norm() / denom } else { 0.0 };
        let pass = span == ker3 && containment < self.opts.quad_tol;
        Ok(QuadraticReport {
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            kernel_dim: Some(dk),
            relation_span: Some(span),
            degree3_kernel_dim: Some(ker3),
            containment_residual: Some(containment),
            note: None,
        })
    }

    /// Random coefficient vector for degree `n`.
    pub fn random_element<R: Rng>(&self, n: u32, rng: &mut R) -> Result<RingElement> {
        let d = piece_dim(n, &self.data)?;
        let v = (0..d)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Ok(RingElement::homogeneous(n, v))
    }

    /// Largest `‖(uv)w − u(vw)‖ / max(‖(uv)w‖, ‖u(vw)‖)` over `count` random
    /// triples of degree-1 elements drawn from a seeded generator.
    pub fn assoc_residual(&self, count: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let u = self.random_element(1, &mut rng)?;
            let v = self.random_element(1, &mut rng)?;
            let w = self.random_element(1, &mut rng)?;
            let (uv, _) = self.mult(&u, &v)?;
            let (vw, _) = self.mult(&v, &w)?;
            let (left, _) = self.mult(&uv, &w)?;
            let (right, _) = self.mult(&u, &vw)?;
            let scale = left.norm().max(right.norm());
            let r = if scale > 0.0 { left.distance(&right) / scale } else { 0.0 };
            worst = worst.max(r);
        }
        Ok(worst)
    }

    /// Everything the `ring` report needs, up to `max_degree`.
    pub fn report(&self, max_degree: u32, assoc_samples: usize, seed: u64) -> Result<RingReport> {
        let dims = (0..=max_degree)
            .map(|n| piece_dim(n, &self.data))
            .collect::<Result<Vec<_>>>()?;
        let gen = self.check_generation(max_degree)?;
        let quad = if max_degree >= 3 {
            self.check_quadratic()?
        } else {
            QuadraticReport {
                verdict: Verdict::NotApplicable,
                kernel_dim: None,
                relation_span: None,
                degree3_kernel_dim: None,
                containment_residual: None,
                note: Some("needs max degree ≥ 3".into()),
            }
        };
        let assoc = if max_degree >= 3 {
            self.assoc_residual(assoc_samples, seed)?
        } else {
            0.0
        };
        let mut keys: Vec<(u32, u32)> = self.tensors.lock().expect("tensor cache").keys().copied().collect();
        keys.sort();
        let tensors = keys
            .into_iter()
            .map(|(m, n)| self.structure_tensor(m, n).map(|t| (*t).clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(RingReport {
            dims,
            generation: gen.steps.iter().map(|s| s.generated).collect(),
            generation_ranks: gen.steps.iter().map(|s| s.rank).collect(),
            quadratic: quad.verdict == Verdict::Pass,
            quadratic_report: quad,
            assoc_residual: assoc,
            tensors,
        })
    }
}

fn inconclusive(e: Error) -> QuadraticReport {
    QuadraticReport {
        verdict: Verdict::Inconclusive,
        kernel_dim: None,
        relation_span: None,
        degree3_kernel_dim: None,
        containment_residual: None,
        note: Some(e.to_string()),
    }
}

fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().singular_values().iter().copied().collect()
}

/// Number of singular values above `rel_tol` times the largest.
pub fn numerical_rank(m: &DMatrix<Complex64>, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthonormal basis of the numerical null space, as columns.
pub fn null_space(m: &DMatrix<Complex64>, rel_tol: f64) -> DMatrix<Complex64> {
    let (r, c) = (m.nrows(), m.ncols());
    // Pad to a square matrix so the SVD returns a full set of right vectors.
    let mut sq = DMatrix::<Complex64>::zeros(r.max(c), c);
    sq.view_mut((0, 0), (r, c)).copy_from(m);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..c)
        .filter(|&i| svd.singular_values[i] <= rel_tol * smax)
        .collect();
    DMatrix::from_fn(c, cols.len(), |row, a| v_t[(cols[a], row)].conj())
}

/// Compares nonzero tensor entries with `ϑ_{a/b}(lτ)` over `b ≤ b_max`,
/// `l ≤ l_max`, matching first on modulus and then on the complex value.
pub fn theta_diagnostic(t: &StructureTensor, tau: Complex64, grid: ThetaGrid) -> Result<ThetaDiagnostic> {
    let [c3, c1, c2] = t.shape;
    let b_max = grid.b_factor * c3;
    let l_max = grid.l_factor * c3;
    let scale = t.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut table: Vec<(f64, i64, i64, u64, Complex64)> = Vec::new();
    for b in 1..=b_max as i64 {
        for a in 0..b {
            if num_integer::gcd(a, b) != 1 {
                continue;
            }
            for l in 1..=l_max as u64 {
                let q = ThetaQuery::new(Ratio::new(a, b), tau * l as f64, 1e-16)?;
                let v = theta_const(&q)?.value;
                table.push((v.norm(), a, b, l, v));
            }
        }
    }
    table.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut entries = Vec::new();
    for k in 0..c3 {
        for i in 0..c1 {
            for j in 0..c2 {
                let value = t.get(k, i, j);
                if value.norm() <= 1e-12 * scale {
                    continue;
                }
                let target = value.norm();
                let pos = table.partition_point(|x| x.0 < target);
                let lo = pos.saturating_sub(8);
                let hi = (pos + 8).min(table.len());
                let best = table[lo..hi]
                    .iter()
                    .map(|&(_, a, b, l, v)| (a, b, l, v, (value - v).norm() / v.norm()))
                    .min_by(|x, y| x.4.total_cmp(&y.4));
                if let Some((a, b, l, v, gap)) = best {
                    entries.push(ThetaMatch {
                        k,
                        i,
                        j,
                        value,
                        r: (a, b),
                        l,
                        theta: v,
                        rel_gap: gap,
                    });
                }
            }
        }
    }
    Ok(ThetaDiagnostic {
        b_max,
        l_max,
        matched: entries.iter().filter(|e| e.rel_gap < 1e-8).count(),
        nonzero: entries.len(),
        entries,
    })
}

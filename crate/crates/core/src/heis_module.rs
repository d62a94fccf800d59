//! Heisenberg bimodules `E_{gⁿ} = S(ℝ) ⊗ C(ℤ/c_nℤ)` over `𝒜_θ`.
//!
//! An element is stored fiberwise, `ξ(x, [k]) = F_k(x)`, with each `F_k` a
//! sum of Gaussian atoms. For `gⁿ = [[a, b], [c, d]]`, `λ = cθ + d` and
//! `ε = λ/c` the actions are
//!
//! | operator | right                     | left                         |
//! |----------|---------------------------|------------------------------|
//! | `U`      | `F(x − ε, k − 1)`         | `F(x − 1/c, k − a)`          |
//! | `V`      | `e(x)·ē(dk/c)·F(x, k)`    | `e(x/λ)·ē(k/c)·F(x, k)`      |
//!
//! Operator products act by `ξ·(ab) = (ξ·a)·b` and `(ab)·ξ = a·(b·ξ)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{ConditioningReport, Error, Result};
use crate::heis_rep::{holomorphic_vector, FiniteVector, GaussianAtom, SchwartzVector};
use crate::qfield::{rank_value, QuadIrr, RmData, Sl2Matrix};
use crate::torus_alg::{e, TorusElement};

/// Default relative truncation tolerance of [`balanced_product`].
pub const DEFAULT_TOL: f64 = 1e-10;
/// Condition numbers above this reject a least-squares expansion.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e10;
/// Hard cap on lattice terms summed per output fiber.
pub const MAX_LATTICE_TERMS: usize = 1_000_000;

/// Everything a degree-`n` module needs to know about `gⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub data: RmData,
    pub degree: u32,
    pub gn: Sl2Matrix,
    /// `ε_n = (c_nθ + d_n)/c_n`.
    pub eps: QuadIrr,
    /// `λ_n = c_nθ + d_n`, the rank.
    pub lambda: QuadIrr,
    eps_f: f64,
    lambda_f: f64,
}

impl Level {
    pub fn new(data: &RmData, degree: u32) -> Result<Arc<Self>> {
        if degree == 0 {
            return Err(Error::domain("bimodules start at degree 1"));
        }
        let gn = data.g.pow(degree)?;
        if gn.c <= 0 {
            return Err(Error::domain(format!("{gn} has c ≤ 0")));
        }
        let lambda = rank_value(&data.g, degree, &data.theta)?;
        let eps = lambda.checked_div(&QuadIrr::from_integer(gn.c))?;
        Ok(Arc::new(Level {
            data: data.clone(),
            degree,
            gn,
            eps_f: eps.to_f64(),
            lambda_f: lambda.to_f64(),
            eps,
            lambda,
        }))
    }

    /// `c_n`, the size of the finite part.
    pub fn modulus(&self) -> i64 {
        self.gn.c
    }

    pub fn eps_f64(&self) -> f64 {
        self.eps_f
    }

    pub fn lambda_f64(&self) -> f64 {
        self.lambda_f
    }

    /// `f_{τ,n}(x) = e(τx²/(2ε_n))`.
    pub fn holomorphic_vector(&self, tau: Complex64) -> Result<GaussianAtom> {
        holomorphic_vector(tau, self.eps_f)
    }

    fn same_as(&self, other: &Level) -> bool {
        self.degree == other.degree && self.data == other.data
    }

    /// `ē(m·k/c)` computed from the exact residue of `m·k mod c`.
    fn finite_phase(&self, m: i64, k: i64) -> Complex64 {
        let c = self.gn.c as i128;
        let r = (m as i128 * k as i128).rem_euclid(c);
        e(-(r as f64) / c as f64)
    }
}

/// Generators of `𝒜_θ` and their inverses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    U,
    V,
    UInv,
    VInv,
}

#[derive(Clone, Debug)]
pub struct ModuleElement {
    level: Arc<Level>,
    fibers: Vec<SchwartzVector>,
}

impl PartialEq for ModuleElement {
    fn eq(&self, other: &Self) -> bool {
        self.level.same_as(&other.level) && self.fibers == other.fibers
    }
}

impl ModuleElement {
    pub fn zero(level: Arc<Level>) -> Self {
        let c = level.modulus() as usize;
        ModuleElement {
            level,
            fibers: vec![SchwartzVector::zero(); c],
        }
    }

    /// `f ⊗ δ_k`.
    pub fn basis(level: Arc<Level>, f: GaussianAtom, k: i64) -> Self {
        let mut x = Self::zero(level);
        let c = x.modulus();
        x.fibers[k.rem_euclid(c) as usize].push(f);
        x
    }

    /// `f_{τ,n} ⊗ δ_k`.
    pub fn holomorphic_basis(level: Arc<Level>, tau: Complex64, k: i64) -> Result<Self> {
        let f = level.holomorphic_vector(tau)?;
        Ok(Self::basis(level, f, k))
    }

    /// `Σ fᵢ ⊗ φᵢ`.
    pub fn from_terms(
        level: Arc<Level>,
        terms: impl IntoIterator<Item = (SchwartzVector, FiniteVector)>,
    ) -> Result<Self> {
        let mut x = Self::zero(level);
        let c = x.modulus();
        for (f, phi) in terms {
            if phi.c != c {
                return Err(Error::domain(format!(
                    "finite vector has modulus {}, degree-{} module needs {c}",
                    phi.c,
                    x.level.degree
                )));
            }
            for (k, &w) in phi.entries.iter().enumerate() {
                if w != Complex64::default() {
                    x.fibers[k] = x.fibers[k].add(&f.scale(w));
                }
            }
        }
        Ok(x)
    }

    pub fn from_fibers(level: Arc<Level>, fibers: Vec<SchwartzVector>) -> Result<Self> {
        if fibers.len() as i64 != level.modulus() {
            return Err(Error::domain(format!(
                "{} fibers given, modulus is {}",
                fibers.len(),
                level.modulus()
            )));
        }
        Ok(ModuleElement { level, fibers })
    }

    pub fn level(&self) -> &Arc<Level> {
        &self.level
    }

    pub fn degree(&self) -> u32 {
        self.level.degree
    }

    pub fn modulus(&self) -> i64 {
        self.level.modulus()
    }

    pub fn fiber(&self, k: i64) -> &SchwartzVector {
        &self.fibers[k.rem_euclid(self.modulus()) as usize]
    }

    pub fn fibers(&self) -> &[SchwartzVector] {
        &self.fibers
    }

    pub fn is_zero(&self) -> bool {
        self.fibers.iter().all(SchwartzVector::is_zero)
    }

    pub fn eval(&self, x: f64, k: i64) -> Complex64 {
        self.fiber(k).eval(x)
    }

    /// The rank `c_nθ + d_n` of the underlying module.
    pub fn rank(&self) -> QuadIrr {
        self.level.lambda.clone()
    }

    fn check_level(&self, other: &Self) -> Result<()> {
        if !self.level.same_as(&other.level) {
            return Err(Error::domain(format!(
                "module elements of degree {} and {} (or different data)",
                self.degree(),
                other.degree()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_level(other)?;
        let fibers = self
            .fibers
            .iter()
            .zip(&other.fibers)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(ModuleElement {
            level: self.level.clone(),
            fibers,
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map_fibers(|_, f| f.scale(s))
    }

    fn map_fibers(&self, f: impl Fn(i64, &SchwartzVector) -> SchwartzVector) -> Self {
        ModuleElement {
            level: self.level.clone(),
            fibers: self
                .fibers
                .iter()
                .enumerate()
                .map(|(k, v)| f(k as i64, v))
                .collect(),
        }
    }

    /// `G(x, k) = F(x − shift, k − step)`.
    fn shift(&self, shift: f64, step: i64) -> Self {
        let c = self.modulus();
        let level = self.level.clone();
        let fibers = (0..c)
            .map(|k| self.fiber(k - step).map(|a| a.translate(-shift)))
            .collect();
        ModuleElement { level, fibers }
    }

    /// `ξ·Uⁿ`.
    pub fn right_u_pow(&self, n: i64) -> Self {
        self.shift(n as f64 * self.level.eps_f, n)
    }

    /// `ξ·Vᵐ`.
    pub fn right_v_pow(&self, m: i64) -> Self {
        let d = self.level.gn.d;
        self.map_fibers(|k, f| {
            let ph = self.level.finite_phase(m.wrapping_mul(d), k);
            f.map(|a| a.modulate(m as f64).scale(ph))
        })
    }

    /// `Uⁿ·ξ`.
    pub fn left_u_pow(&self, n: i64) -> Self {
        let c = self.modulus();
        self.shift(n as f64 / c as f64, n.wrapping_mul(self.level.gn.a))
    }

    /// `Vᵐ·ξ`.
    pub fn left_v_pow(&self, m: i64) -> Self {
        let lam = self.level.lambda_f;
        self.map_fibers(|k, f| {
            let ph = self.level.finite_phase(m, k);
            f.map(|a| a.modulate(m as f64 / lam).scale(ph))
        })
    }

    pub fn right_act(&self, a: Generator) -> Self {
        match a {
            Generator::U => self.right_u_pow(1),
            Generator::UInv => self.right_u_pow(-1),
            Generator::V => self.right_v_pow(1),
            Generator::VInv => self.right_v_pow(-1),
        }
    }

    pub fn left_act(&self, a: Generator) -> Self {
        match a {
            Generator::U => self.left_u_pow(1),
            Generator::UInv => self.left_u_pow(-1),
            Generator::V => self.left_v_pow(1),
            Generator::VInv => self.left_v_pow(-1),
        }
    }

    fn check_theta(&self, x: &TorusElement) -> Result<()> {
        if x.theta() != &self.level.data.theta {
            return Err(Error::domain(format!(
                "algebra element over θ = {} acting on a module over θ = {}",
                x.theta(),
                self.level.data.theta
            )));
        }
        Ok(())
    }

    /// `ξ·x` for `x = Σ a_{n,m} UⁿVᵐ`.
    pub fn right_mul(&self, x: &TorusElement) -> Result<Self> {
        self.check_theta(x)?;
        let mut out = Self::zero(self.level.clone());
        for ((n, m), a) in x.terms() {
            out = out.add(&self.right_u_pow(n).right_v_pow(m).scale(a))?;
        }
        Ok(out)
    }

    /// `x·ξ` for `x = Σ a_{n,m} UⁿVᵐ`.
    pub fn left_mul(&self, x: &TorusElement) -> Result<Self> {
        self.check_theta(x)?;
        let mut out = Self::zero(self.level.clone());
        for ((n, m), a) in x.terms() {
            out = out.add(&self.left_v_pow(m).left_u_pow(n).scale(a))?;
        }
        Ok(out)
    }

    /// Atom centers and the widest envelope, used to place sample grids.
    fn envelope(&self) -> Option<(f64, f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut w: f64 = 0.0;
        for f in &self.fibers {
            for a in &f.atoms {
                lo = lo.min(a.center());
                hi = hi.max(a.center());
                w = w.max(a.width());
            }
        }
        (lo <= hi).then_some((lo, hi, w))
    }

    /// Largest pointwise difference to `other`, relative to the largest
    /// sampled magnitude, on a grid covering both elements' envelopes.
    pub fn relative_diff(&self, other: &Self) -> Result<f64> {
        self.check_level(other)?;
        let env = match (self.envelope(), other.envelope()) {
            (Some(a), Some(b)) => (a.0.min(b.0), a.1.max(b.1), a.2.max(b.2)),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => return Ok(0.0),
        };
        let grid = span_grid(env.0 - 4.0 * env.2, env.1 + 4.0 * env.2, 97);
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in 0..self.modulus() {
            for &x in &grid {
                let (a, b) = (self.eval(x, k), other.eval(x, k));
                diff = diff.max((a - b).norm());
                scale = scale.max(a.norm()).max(b.norm());
            }
        }
        Ok(if scale == 0.0 { diff } else { diff / scale })
    }
}

fn span_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl Serialize for ModuleElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term<'a> {
            schwartz: &'a SchwartzVector,
            finite: Vec<Complex64>,
        }
        let c = self.modulus();
        let terms: Vec<Term> = self
            .fibers
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.is_zero())
            .map(|(k, f)| Term {
                schwartz: f,
                finite: FiniteVector::delta(c, k as i64).expect("valid modulus").entries,
            })
            .collect();
        let mut st = s.serialize_struct("ModuleElement", 3)?;
        st.serialize_field("data", &self.level.data)?;
        st.serialize_field("degree", &self.level.degree)?;
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}

/// Result of a connection: direction and `∇ᵢξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionValue {
    pub direction: u8,
    pub result: ModuleElement,
}

/// `∇₁ = 2πix/ε_n`, `∇₂ = d/dx`, acting on the Schwartz factor.
pub fn connection(i: u8, xi: &ModuleElement) -> Result<ConnectionValue> {
    let eps = xi.level.eps_f;
    let result = match i {
        1 => xi.map_fibers(|_, f| {
            f.map(|a| a.mul_poly(&[Complex64::default(), Complex64::new(0.0, 2.0 * PI / eps)]))
        }),
        2 => xi.map_fibers(|_, f| f.derivative()),
        _ => return Err(Error::domain(format!("connection direction must be 1 or 2, got {i}"))),
    };
    Ok(ConnectionValue {
        direction: i,
        result,
    })
}

/// The constant curvature `[∇₁, ∇₂] = −2πi/ε_n`.
pub fn curvature(level: &Level) -> Complex64 {
    Complex64::new(0.0, -2.0 * PI / level.eps_f)
}

/// Rank `c_nθ + d_n` of `E_{gⁿ}`.
pub fn rank(g: &Sl2Matrix, n: u32, theta: &QuadIrr) -> Result<QuadIrr> {
    rank_value(g, n, theta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalanceOptions {
    /// Relative truncation tolerance for the lattice sum.
    pub tol: f64,
    /// When set, the image is also expanded in `{xᵖ f_{τ,m+n}}`.
    pub tau: Option<Complex64>,
    pub poly_degree: usize,
    pub condition_limit: f64,
}

impl Default for BalanceOptions {
    fn default() -> Self {
        BalanceOptions {
            tol: DEFAULT_TOL,
            tau: None,
            poly_degree: 0,
            condition_limit: DEFAULT_CONDITION_LIMIT,
        }
    }
}

/// Coefficients of an image in the basis `xᵖ f_{τ,N} ⊗ δ_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expansion {
    /// `coeffs[k][p]`.
    pub coeffs: Vec<Vec<Complex64>>,
    /// `‖ΦC − Y‖_F / ‖Y‖_F` over the sample grid.
    pub residual: f64,
    pub condition: f64,
    pub grid: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct BalancedProduct {
    pub image: ModuleElement,
    pub expansion: Option<Expansion>,
    /// Bound on the modulus of the discarded lattice terms, summed over fibers.
    pub tail_bound: f64,
    pub terms_used: usize,
}

/// The image of `ξ ⊗ η` under `E_{gᵐ} ⊗_{𝒜_θ} E_{gⁿ} → E_{g^{m+n}}`.
///
/// With subscripts 1, 2, 3 for degrees `m`, `n`, `m+n`,
///
/// `μ(F, G)(z, k) = Σ_{i∈ℤ} F(z/λ₂ + ε₁i − λ₁k/c₃, [i]) · G(z − i/c₂ + c₁k/(c₂c₃), [k − a₂i])`.
///
/// The map satisfies `μ(ξU, η) = μ(ξ, Uη)`, `μ(ξV, η) = μ(ξ, Vη)` and is a
/// bimodule map. Each term is again an atom, so the image is exact up to
/// the truncation of the sum over `i`.
pub fn balanced_product(
    xi: &ModuleElement,
    eta: &ModuleElement,
    opts: &BalanceOptions,
) -> Result<BalancedProduct> {
    if xi.level.data != eta.level.data {
        return Err(Error::domain("balanced product of modules over different data"));
    }
    let (l1, l2) = (&xi.level, &eta.level);
    let l3 = Level::new(&l1.data, l1.degree + l2.degree)?;
    let c1 = l1.modulus();
    let c2 = l2.modulus();
    let c3 = l3.modulus();
    let a2 = l2.gn.a;
    let (eps1, lam1, lam2) = (l1.eps_f, l1.lambda_f, l2.lambda_f);
    let (c1f, c2f, c3f) = (c1 as f64, c2 as f64, c3 as f64);

    let s_f = |i: i64, k: i64| eps1 * i as f64 - lam1 * k as f64 / c3f;
    let s_g = |i: i64, k: i64| -(i as f64) / c2f + c1f * k as f64 / (c2f * c3f);

    let term = |i: i64, k: i64| -> Vec<GaussianAtom> {
        let fa = xi.fiber(i);
        let gb = eta.fiber(k - a2.wrapping_mul(i));
        if fa.is_zero() || gb.is_zero() {
            return Vec::new();
        }
        let (sf, sg) = (s_f(i, k), s_g(i, k));
        let left: Vec<GaussianAtom> = fa.atoms.iter().map(|a| a.translate(sf).dilate(1.0 / lam2)).collect();
        let right: Vec<GaussianAtom> = gb.atoms.iter().map(|b| b.translate(sg)).collect();
        let mut out = Vec::with_capacity(left.len() * right.len());
        for a in &left {
            for b in &right {
                out.push(a.product(b));
            }
        }
        out
    };
    let bound_of = |atoms: &[GaussianAtom]| atoms.iter().map(GaussianAtom::sup_bound).sum::<f64>();

    // Values of i where the envelopes of an F-atom and a G-atom line up.
    let seeds = |k: i64| -> Option<(i64, i64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for fa in &xi.fibers {
            for a in &fa.atoms {
                for gb in &eta.fibers {
                    for b in &gb.atoms {
                        let h = |i: f64| {
                            lam2 * (a.center() - (eps1 * i - lam1 * k as f64 / c3f))
                                - (b.center() - (-i / c2f + c1f * k as f64 / (c2f * c3f)))
                        };
                        let (h0, h1) = (h(0.0), h(1.0));
                        let i0 = -h0 / (h1 - h0);
                        lo = lo.min(i0);
                        hi = hi.max(i0);
                    }
                }
            }
        }
        (lo.is_finite() && hi.is_finite()).then(|| (lo.floor() as i64, hi.ceil() as i64))
    };

    let period = (c1 as usize).saturating_mul(c2 as usize).max(1);
    let mut fibers = vec![SchwartzVector::zero(); c3 as usize];
    let mut tail_bound = 0.0;
    let mut terms_used = 0usize;
    for k in 0..c3 {
        let Some((lo, hi)) = seeds(k) else { continue };
        let fiber = &mut fibers[k as usize];
        let mut bmax: f64 = 0.0;
        for i in lo..=hi {
            let t = term(i, k);
            bmax = bmax.max(bound_of(&t));
            for a in t {
                fiber.push(a);
            }
            terms_used += 1;
        }
        for dir in [-1i64, 1] {
            let mut i = if dir < 0 { lo - 1 } else { hi + 1 };
            let mut prev: Option<f64> = None;
            let mut zero_run = 0usize;
            let mut scanned = 0usize;
            loop {
                let t = term(i, k);
                let b = bound_of(&t);
                scanned += 1;
                if scanned > MAX_LATTICE_TERMS {
                    return Err(Error::domain(format!(
                        "lattice sum did not converge within {MAX_LATTICE_TERMS} terms"
                    )));
                }
                if b == 0.0 {
                    zero_run += 1;
                    if zero_run >= period {
                        break;
                    }
                    i += dir;
                    continue;
                }
                zero_run = 0;
                bmax = bmax.max(b);
                for a in t {
                    fiber.push(a);
                }
                terms_used += 1;
                if let Some(p) = prev {
                    let r = b / p;
                    if b <= 1e-3 * opts.tol * bmax && r <= 0.5 {
                        tail_bound += b * r / (1.0 - r);
                        break;
                    }
                }
                prev = Some(b);
                i += dir;
            }
        }
    }
    let image = ModuleElement { level: l3, fibers };
    let expansion = match opts.tau {
        Some(tau) => Some(expand_holomorphic(&image, tau, opts.poly_degree, opts.condition_limit)?),
        None => None,
    };
    Ok(BalancedProduct {
        image,
        expansion,
        tail_bound,
        terms_used,
    })
}

/// Least-squares expansion of every fiber of `xi` in `{xᵖ f_{τ,N} : p ≤ P}`
/// on a shared grid.
pub fn expand_holomorphic(
    xi: &ModuleElement,
    tau: Complex64,
    poly_degree: usize,
    condition_limit: f64,
) -> Result<Expansion> {
    let f = xi.level.holomorphic_vector(tau)?;
    let (lo, hi, w) = xi.envelope().unwrap_or((0.0, 0.0, 0.0));
    let w = w.max(f.width());
    let lo = lo.min(0.0) - 4.0 * w;
    let hi = hi.max(0.0) + 4.0 * w;
    let cols = poly_degree + 1;
    let c = xi.modulus() as usize;
    let n = (4 * c * cols).max(16);
    let grid = span_grid(lo, hi, n);

    let phi = DMatrix::<Complex64>::from_fn(n, cols, |s, p| {
        let x = grid[s];
        f.eval(x) * x.powi(p as i32)
    });
    let y = DMatrix::<Complex64>::from_fn(n, c, |s, k| xi.fibers[k].eval(grid[s]));

    let svd = phi.clone().svd(true, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition.is_nan() || condition > condition_limit {
        return Err(Error::Conditioning(Box::new(ConditioningReport {
            condition,
            threshold: condition_limit,
            singular_values: sv,
            grid,
        })));
    }
    let coef = svd
        .solve(&y, 0.0)
        .map_err(|m| Error::domain(format!("least-squares solve failed: {m}")))?;
    let resid = &phi * &coef - &y;
    let ynorm = y.norm();
    let residual = if ynorm > 0.0 { resid.norm() / ynorm } else { resid.norm() };
    let coeffs = (0..c)
        .map(|k| (0..cols).map(|p| coef[(p, k)]).collect())
        .collect();
    Ok(Expansion {
        coeffs,
        residual,
        condition,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heis_rep::GaussianAtom;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn data() -> RmData {
        RmData::new(
            QuadIrr::new(-5, 1, 10, 5).unwrap(),
            Sl2Matrix::new(-1, -1, 5, 4).unwrap(),
        )
        .unwrap()
    }

    fn golden() -> RmData {
        RmData::from_theta(QuadIrr::new(1, 1, 2, 5).unwrap()).unwrap()
    }

    fn tau() -> Complex64 {
        c(0.3, 1.1)
    }

    fn sample(level: &Arc<Level>) -> ModuleElement {
        let a = GaussianAtom::new(vec![c(1.0, 0.2), c(0.3, -0.1)], c(0.1, 0.9), c(0.2, -0.1)).unwrap();
        let b = GaussianAtom::gaussian(c(-0.2, 1.3), c(0.0, 0.4)).unwrap();
        let mut x = ModuleElement::basis(level.clone(), a, 0);
        x = x.add(&ModuleElement::basis(level.clone(), b, level.modulus() - 1)).unwrap();
        x
    }

    #[test]
    fn degree_bookkeeping() {
        let d = data();
        let l1 = Level::new(&d, 1).unwrap();
        let l2 = Level::new(&d, 2).unwrap();
        assert_eq!(l1.modulus(), 5);
        assert_eq!(l2.modulus(), 15);
        // ε₂ = cε²/(a+d)
        let g = d.g;
        let rec = l1
            .eps
            .pow(2)
            .mul_int(g.c)
            .checked_div(&QuadIrr::from_integer(g.trace()))
            .unwrap();
        assert_eq!(rec, l2.eps);
        assert!(Level::new(&d, 0).is_err());
    }

    #[test]
    fn right_relation() {
        let d = data();
        let l = Level::new(&d, 1).unwrap();
        let xi = sample(&l);
        let lhs = xi.right_act(Generator::U).right_act(Generator::V);
        let rhs = xi
            .right_act(Generator::V)
            .right_act(Generator::U)
            .scale(e(d.theta.to_f64()));
        assert!(lhs.relative_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn left_relation() {
        let d = data();
        for n in 1..=2 {
            let l = Level::new(&d, n).unwrap();
            let xi = sample(&l);
            let lhs = xi.left_act(Generator::V).left_act(Generator::U);
            let rhs = xi
                .left_act(Generator::U)
                .left_act(Generator::V)
                .scale(e(d.theta.to_f64()));
            assert!(lhs.relative_diff(&rhs).unwrap() < 1e-12, "degree {n}");
        }
    }

    #[test]
    fn inverses_undo_generators() {
        let l = Level::new(&data(), 1).unwrap();
        let xi = sample(&l);
        for (g, h) in [(Generator::U, Generator::UInv), (Generator::V, Generator::VInv)] {
            assert!(xi.right_act(g).right_act(h).relative_diff(&xi).unwrap() < 1e-13);
            assert!(xi.left_act(g).left_act(h).relative_diff(&xi).unwrap() < 1e-13);
        }
    }

    #[test]
    fn zero_stays_zero() {
        let l = Level::new(&data(), 1).unwrap();
        let z = ModuleElement::zero(l);
        assert!(z.right_act(Generator::U).is_zero());
        assert!(z.left_act(Generator::V).is_zero());
    }

    #[test]
    fn torus_element_actions_match_generators() {
        let d = data();
        let l = Level::new(&d, 1).unwrap();
        let xi = sample(&l);
        let u = TorusElement::u(d.theta.clone());
        let v = TorusElement::v(d.theta.clone());
        let uv = u.multiply(&v).unwrap();
        let a = xi.right_mul(&uv).unwrap();
        let b = xi.right_act(Generator::U).right_act(Generator::V);
        assert!(a.relative_diff(&b).unwrap() < 1e-13);
        let a = xi.left_mul(&uv).unwrap();
        let b = xi.left_act(Generator::V).left_act(Generator::U);
        assert!(a.relative_diff(&b).unwrap() < 1e-13);
        let other = TorusElement::u(QuadIrr::sqrt(2).unwrap());
        assert!(xi.right_mul(&other).is_err());
    }

    #[test]
    fn curvature_is_constant() {
        let l = Level::new(&data(), 2).unwrap();
        let xi = sample(&l);
        let a = connection(2, &connection(1, &xi).unwrap().result).unwrap().result;
        let b = connection(1, &connection(2, &xi).unwrap().result).unwrap().result;
        let comm = b.add(&a.scale(c(-1.0, 0.0))).unwrap();
        let want = xi.scale(curvature(&l));
        assert!(comm.relative_diff(&want).unwrap() < 1e-13);
        assert!(connection(3, &xi).is_err());
    }

    #[test]
    fn holomorphic_square_degree_and_residual() {
        let d = data();
        let l1 = Level::new(&d, 1).unwrap();
        let x = ModuleElement::holomorphic_basis(l1.clone(), tau(), 0).unwrap();
        let opts = BalanceOptions {
            tau: Some(tau()),
            ..Default::default()
        };
        let p = balanced_product(&x, &x, &opts).unwrap();
        assert_eq!(p.image.degree(), 2);
        assert_eq!(p.image.modulus(), 15);
        let ex = p.expansion.unwrap();
        assert!(ex.residual < 1e-8, "residual {}", ex.residual);
        assert!(p.tail_bound < 1e-9);
    }

    #[test]
    fn golden_products_have_one_dimensional_inputs() {
        let d = golden();
        let l1 = Level::new(&d, 1).unwrap();
        assert_eq!(l1.modulus(), 1);
        let x = ModuleElement::holomorphic_basis(l1, tau(), 0).unwrap();
        let opts = BalanceOptions {
            tau: Some(tau()),
            ..Default::default()
        };
        let p = balanced_product(&x, &x, &opts).unwrap();
        assert_eq!(p.image.modulus(), 3);
        assert!(p.expansion.unwrap().residual < 1e-8);
    }

    #[test]
    fn conditioning_failure_is_reported() {
        let d = data();
        let l1 = Level::new(&d, 1).unwrap();
        let x = ModuleElement::holomorphic_basis(l1, tau(), 0).unwrap();
        let err = expand_holomorphic(&x, tau(), 12, 1e3).unwrap_err();
        assert!(err.is_conditioning());
    }
}

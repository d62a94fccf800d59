//! Heisenberg groups over `ℝ²` and `(ℤ/cℤ)²` and their Schrödinger-type
//! representations.
//!
//! Smooth vectors are kept symbolically as sums of atoms
//! `poly(x)·e(αx² + βx)` with `Im α > 0`; every operator used here maps
//! atoms to atoms, so translations by irrational amounts stay exact.

use std::collections::HashSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus_alg::{e, e_complex};

const I2PI: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// Tolerance for `|λ| = 1`.
pub const UNIT_TOL: f64 = 1e-12;

/// `poly(x)·e(αx² + βx)`; `poly` holds coefficients in increasing degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianAtom {
    pub poly: Vec<Complex64>,
    pub alpha: Complex64,
    pub beta: Complex64,
}

fn trim(poly: &mut Vec<Complex64>) {
    while poly.last().is_some_and(|c| *c == Complex64::default()) {
        poly.pop();
    }
}

fn poly_eval(poly: &[Complex64], x: Complex64) -> Complex64 {
    poly.iter().rev().fold(Complex64::default(), |acc, &c| acc * x + c)
}

/// Coefficients of `p(x + s)`.
fn taylor_shift(poly: &[Complex64], s: Complex64) -> Vec<Complex64> {
    let mut out = poly.to_vec();
    // Repeated synthetic division by (x − (−s)).
    let n = out.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            let next = out[j + 1];
            out[j] += s * next;
        }
    }
    out
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::default(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

impl GaussianAtom {
    pub fn new(poly: Vec<Complex64>, alpha: Complex64, beta: Complex64) -> Result<Self> {
        if alpha.im <= 0.0 || !alpha.im.is_finite() {
            return Err(Error::domain(format!(
                "atom needs Im(alpha) > 0 to decay, got alpha = {alpha}"
            )));
        }
        let mut poly = poly;
        trim(&mut poly);
        Ok(GaussianAtom { poly, alpha, beta })
    }

    /// `e(αx² + βx)`.
    pub fn gaussian(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new(vec![Complex64::new(1.0, 0.0)], alpha, beta)
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.poly.len().checked_sub(1)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.eval_complex(Complex64::from(x))
    }

    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        if self.poly.is_empty() {
            return Complex64::default();
        }
        poly_eval(&self.poly, x) * e_complex(self.alpha * x * x + self.beta * x)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut poly: Vec<_> = self.poly.iter().map(|&c| c * s).collect();
        trim(&mut poly);
        GaussianAtom { poly, ..self.clone() }
    }

    /// `x ↦ f(x + s)`.
    pub fn translate(&self, s: f64) -> Self {
        let s = Complex64::from(s);
        let lead = e_complex(self.alpha * s * s + self.beta * s);
        let mut poly: Vec<_> = taylor_shift(&self.poly, s).into_iter().map(|c| c * lead).collect();
        trim(&mut poly);
        GaussianAtom {
            poly,
            alpha: self.alpha,
            beta: self.beta + 2.0 * self.alpha * s,
        }
    }

    /// `x ↦ e(bx)·f(x)`.
    pub fn modulate(&self, b: f64) -> Self {
        GaussianAtom {
            beta: self.beta + b,
            ..self.clone()
        }
    }

    /// `x ↦ f(sx)` for real `s ≠ 0`.
    pub fn dilate(&self, s: f64) -> Self {
        let mut pow = 1.0;
        let poly = self
            .poly
            .iter()
            .map(|&c| {
                let v = c * pow;
                pow *= s;
                v
            })
            .collect();
        GaussianAtom {
            poly,
            alpha: self.alpha * (s * s),
            beta: self.beta * s,
        }
    }

    /// Pointwise product of two atoms.
    pub fn product(&self, other: &Self) -> Self {
        GaussianAtom {
            poly: poly_mul(&self.poly, &other.poly),
            alpha: self.alpha + other.alpha,
            beta: self.beta + other.beta,
        }
    }

    /// `x ↦ p(x)·f(x)`.
    pub fn mul_poly(&self, p: &[Complex64]) -> Self {
        let mut poly = poly_mul(&self.poly, p);
        trim(&mut poly);
        GaussianAtom { poly, ..self.clone() }
    }

    pub fn derivative(&self) -> Self {
        // (p e)' = (p' + 2πi(2αx + β)p) e
        let dp: Vec<Complex64> = self
            .poly
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        let lin = [I2PI * self.beta, I2PI * 2.0 * self.alpha];
        let mut poly = poly_add(&dp, &poly_mul(&self.poly, &lin));
        trim(&mut poly);
        GaussianAtom { poly, ..self.clone() }
    }

    /// Center `−Re(β')/(2 Im α)`-style location of the Gaussian envelope:
    /// the point where `|e(αx² + βx)|` peaks.
    pub fn center(&self) -> f64 {
        -self.beta.im / (2.0 * self.alpha.im)
    }

    /// Envelope width `1/sqrt(4π Im α)` (standard deviation of `|f|²`).
    pub fn width(&self) -> f64 {
        1.0 / (4.0 * PI * self.alpha.im).sqrt()
    }

    /// `sup_x |f(x)|` bound: `max |e(..)|` times a polynomial bound over the
    /// region where the envelope matters, plus the polynomial's own growth.
    pub fn sup_bound(&self) -> f64 {
        if self.poly.is_empty() {
            return 0.0;
        }
        let a = self.alpha.im;
        let x0 = self.center();
        // log |e(αx²+βx)| = −2π(a x² + Im β x) peaks at x0.
        let log_peak = 2.0 * PI * a * x0 * x0;
        // |p(x)| ≤ Σ |c_k| |x|^k, and |x|^k e^{−2πa(x−x0)²} ≤ (|x0| + w_k)^k
        // with w_k = sqrt(k/(4πa)) maximizing the product.
        let mut s = 0.0;
        for (k, c) in self.poly.iter().enumerate() {
            let w = (k as f64 / (4.0 * PI * a)).sqrt();
            s += c.norm() * (x0.abs() + w).powi(k as i32);
        }
        s * log_peak.exp()
    }
}

/// Finite sum of atoms; atoms with identical `(α, β)` are merged.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SchwartzVector {
    pub atoms: Vec<GaussianAtom>,
}

impl SchwartzVector {
    pub fn zero() -> Self {
        SchwartzVector { atoms: Vec::new() }
    }

    pub fn from_atom(a: GaussianAtom) -> Self {
        let mut v = Self::zero();
        v.push(a);
        v
    }

    pub fn push(&mut self, a: GaussianAtom) {
        if a.is_zero() {
            return;
        }
        if let Some(slot) = self
            .atoms
            .iter_mut()
            .find(|b| b.alpha == a.alpha && b.beta == a.beta)
        {
            let mut poly = poly_add(&slot.poly, &a.poly);
            trim(&mut poly);
            slot.poly = poly;
        } else {
            self.atoms.push(a);
        }
        self.atoms.retain(|b| !b.is_zero());
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for a in &other.atoms {
            out.push(a.clone());
        }
        out
    }

    pub fn map(&self, f: impl Fn(&GaussianAtom) -> GaussianAtom) -> Self {
        let mut out = Self::zero();
        for a in &self.atoms {
            out.push(f(a));
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|a| a.scale(s))
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.atoms.iter().map(|a| a.eval(x)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn derivative(&self) -> Self {
        self.map(GaussianAtom::derivative)
    }
}

/// Evaluates a sum of atoms at `x`.
pub fn eval(f: &SchwartzVector, x: f64) -> Complex64 {
    f.eval(x)
}

/// `C(ℤ/cℤ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteVector {
    pub c: i64,
    pub entries: Vec<Complex64>,
}

impl FiniteVector {
    pub fn new(c: i64, entries: Vec<Complex64>) -> Result<Self> {
        if c <= 0 || entries.len() as i64 != c {
            return Err(Error::domain(format!(
                "finite vector of modulus {c} needs {c} entries, got {}",
                entries.len()
            )));
        }
        Ok(FiniteVector { c, entries })
    }

    /// The indicator of `[k]`.
    pub fn delta(c: i64, k: i64) -> Result<Self> {
        let mut v = vec![Complex64::default(); c.max(0) as usize];
        if c > 0 {
            v[k.rem_euclid(c) as usize] = Complex64::new(1.0, 0.0);
        }
        Self::new(c, v)
    }

    pub fn get(&self, k: i64) -> Complex64 {
        self.entries[k.rem_euclid(self.c) as usize]
    }
}

/// A phase `x mod 1` with rational `x`.
pub type RationalPhase = Ratio<i64>;

fn reduce_phase(num: i128, den: i128) -> RationalPhase {
    let r = num.rem_euclid(den);
    let g = num_integer::gcd(r, den);
    Ratio::new_raw((r / g) as i64, (den / g) as i64)
}

fn phase_add(a: RationalPhase, b: RationalPhase) -> RationalPhase {
    let num = *a.numer() as i128 * *b.denom() as i128 + *b.numer() as i128 * *a.denom() as i128;
    reduce_phase(num, *a.denom() as i128 * *b.denom() as i128)
}

fn phase_value(p: RationalPhase) -> Complex64 {
    e(*p.numer() as f64 / *p.denom() as f64)
}

/// `(λ, y)` with `y ∈ ℝ²` and central parameter `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealHeis {
    pub lambda: Complex64,
    pub y: (f64, f64),
    pub eps: f64,
}

/// `(e(φ), y)` with `y ∈ (ℤ/cℤ)²` stored by representatives in `[0, c)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FiniteHeis {
    pub phase: RationalPhase,
    pub y: (i64, i64),
    pub c: i64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HeisElement {
    Real(RealHeis),
    Finite(FiniteHeis),
}

impl RealHeis {
    pub fn new(lambda: Complex64, y: (f64, f64), eps: f64) -> Result<Self> {
        if (lambda.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::domain(format!("|λ| = {} is not 1", lambda.norm())));
        }
        if eps <= 0.0 || !eps.is_finite() {
            return Err(Error::domain(format!("ε = {eps} must be positive")));
        }
        Ok(RealHeis { lambda, y, eps })
    }
}

impl FiniteHeis {
    pub fn new(phase: RationalPhase, y: (i64, i64), c: i64) -> Result<Self> {
        if c <= 0 {
            return Err(Error::domain(format!("modulus c = {c} must be positive")));
        }
        Ok(FiniteHeis {
            phase: reduce_phase(*phase.numer() as i128, *phase.denom() as i128),
            y: (y.0.rem_euclid(c), y.1.rem_euclid(c)),
            c,
        })
    }

    pub fn lambda(&self) -> Complex64 {
        phase_value(self.phase)
    }
}

/// Real cocycle `ψ(x, y) = e((x₁y₂ − y₁x₂)/(2ε))`.
pub fn real_cocycle(x: (f64, f64), y: (f64, f64), eps: f64) -> Complex64 {
    e((x.0 * y.1 - y.0 * x.1) / (2.0 * eps))
}

/// Phase of the cocycle actually realized on representatives in `[0, c)`:
/// `ψ(x, y) = e((x₁y₂ − y₁x₂)/(2c))` times the sign `(−1)^{r₁e₂ + e₁r₂ + c·e₁e₂}`
/// that appears when `x + y = r + c·e` is reduced.
pub fn finite_cocycle(x: (i64, i64), y: (i64, i64), c: i64) -> RationalPhase {
    let (x0, x1) = (x.0.rem_euclid(c) as i128, x.1.rem_euclid(c) as i128);
    let (y0, y1) = (y.0.rem_euclid(c) as i128, y.1.rem_euclid(c) as i128);
    let c = c as i128;
    let base = reduce_phase(x0 * y1 - y0 * x1, 2 * c);
    let (s0, s1) = (x0 + y0, x1 + y1);
    let (e0, r0) = (s0.div_euclid(c), s0.rem_euclid(c));
    let (e1, r1) = (s1.div_euclid(c), s1.rem_euclid(c));
    let sign = reduce_phase(r0 * e1 + e0 * r1 + c * e0 * e1, 2);
    phase_add(base, sign)
}

/// Commutator pairing `e(x, y) = ψ(x, y)/ψ(y, x)` on `(ℤ/cℤ)²`, as a phase.
pub fn finite_pairing(x: (i64, i64), y: (i64, i64), c: i64) -> RationalPhase {
    reduce_phase(x.0 as i128 * y.1 as i128 - y.0 as i128 * x.1 as i128, c as i128)
}

/// `e(x, y) = e((x₁y₂ − y₁x₂)/ε)` on `ℝ²`.
pub fn real_pairing(x: (f64, f64), y: (f64, f64), eps: f64) -> Complex64 {
    e((x.0 * y.1 - y.0 * x.1) / eps)
}

pub fn group_mul(h1: &HeisElement, h2: &HeisElement) -> Result<HeisElement> {
    match (h1, h2) {
        (HeisElement::Real(a), HeisElement::Real(b)) => {
            if a.eps != b.eps {
                return Err(Error::domain(format!("ε mismatch: {} vs {}", a.eps, b.eps)));
            }
            Ok(HeisElement::Real(RealHeis {
                lambda: a.lambda * b.lambda * real_cocycle(a.y, b.y, a.eps),
                y: (a.y.0 + b.y.0, a.y.1 + b.y.1),
                eps: a.eps,
            }))
        }
        (HeisElement::Finite(a), HeisElement::Finite(b)) => {
            if a.c != b.c {
                return Err(Error::domain(format!("modulus mismatch: {} vs {}", a.c, b.c)));
            }
            let phase = phase_add(phase_add(a.phase, b.phase), finite_cocycle(a.y, b.y, a.c));
            FiniteHeis::new(phase, (a.y.0 + b.y.0, a.y.1 + b.y.1), a.c).map(HeisElement::Finite)
        }
        _ => Err(Error::domain("cannot multiply real and finite Heisenberg elements")),
    }
}

/// Companion pairing of [`group_mul`]: `e(x, y)` for two elements of the
/// same group.
pub fn pairing(h1: &HeisElement, h2: &HeisElement) -> Result<Complex64> {
    match (h1, h2) {
        (HeisElement::Real(a), HeisElement::Real(b)) if a.eps == b.eps => {
            Ok(real_pairing(a.y, b.y, a.eps))
        }
        (HeisElement::Finite(a), HeisElement::Finite(b)) if a.c == b.c => {
            Ok(phase_value(finite_pairing(a.y, b.y, a.c)))
        }
        _ => Err(Error::domain("pairing needs two elements of the same group")),
    }
}

/// `U_{(λ,y)} f(x) = λ·e((x·y₂ + y₁y₂/2)/ε)·f(x + y₁)`.
pub fn act_real(h: &RealHeis, f: &SchwartzVector) -> SchwartzVector {
    let (y1, y2) = h.y;
    let lead = h.lambda * e(y1 * y2 / (2.0 * h.eps));
    f.map(|a| a.translate(y1).modulate(y2 / h.eps).scale(lead))
}

/// `U_{(λ,m)} φ([n]) = λ·e((n·m₂ + m₁m₂/2)/c)·φ([n + m₁])`.
pub fn act_finite(h: &FiniteHeis, phi: &FiniteVector) -> Result<FiniteVector> {
    if h.c != phi.c {
        return Err(Error::domain(format!(
            "modulus mismatch: element over {} acting on C(Z/{}Z)",
            h.c, phi.c
        )));
    }
    let c = h.c as i128;
    let (m1, m2) = (h.y.0 as i128, h.y.1 as i128);
    let entries = (0..h.c)
        .map(|n| {
            let ph = phase_add(h.phase, reduce_phase(2 * n as i128 * m2 + m1 * m2, 2 * c));
            phase_value(ph) * phi.get(n + h.y.0)
        })
        .collect();
    FiniteVector::new(h.c, entries)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Isotropy {
    MaximalIsotropic,
    Isotropic,
    Neither,
}

/// The subgroup of `(ℤ/cℤ)²` generated by `gens`.
pub fn generated_subgroup(gens: &[(i64, i64)], c: i64) -> HashSet<(i64, i64)> {
    let mut seen: HashSet<(i64, i64)> = HashSet::from([(0, 0)]);
    let mut frontier = vec![(0, 0)];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = ((x.0 + g.0).rem_euclid(c), (x.1 + g.1).rem_euclid(c));
            if seen.insert(y) {
                frontier.push(y);
            }
        }
    }
    seen
}

/// Decides isotropy of `⟨gens⟩ ⊆ (ℤ/cℤ)²` for the pairing `e(x, y)`.
pub fn isotropic_check(gens: &[(i64, i64)], c: i64) -> Result<Isotropy> {
    if c <= 0 {
        return Err(Error::domain(format!("modulus c = {c} must be positive")));
    }
    let h = generated_subgroup(gens, c);
    let zero = Ratio::from_integer(0);
    let perp: HashSet<(i64, i64)> = (0..c)
        .flat_map(|a| (0..c).map(move |b| (a, b)))
        .filter(|x| h.iter().all(|y| finite_pairing(*x, *y, c) == zero))
        .collect();
    Ok(if h == perp {
        Isotropy::MaximalIsotropic
    } else if h.is_subset(&perp) {
        Isotropy::Isotropic
    } else {
        Isotropy::Neither
    })
}

/// `x ↦ e(x, ·)` is injective on `(ℤ/cℤ)²` (hence a bijection onto the
/// character group), checked by listing every character row.
pub fn pairing_is_nondegenerate(c: i64) -> bool {
    let elems: Vec<(i64, i64)> = (0..c).flat_map(|a| (0..c).map(move |b| (a, b))).collect();
    let rows: HashSet<Vec<RationalPhase>> = elems
        .iter()
        .map(|x| elems.iter().map(|y| finite_pairing(*x, *y, c)).collect())
        .collect();
    rows.len() == elems.len()
}

/// Basis of the Lie algebra with `exp(tA) = (1,(t,0))`, `exp(tB) = (1,(0,t))`
/// and `C` central.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LieGenerator {
    A,
    B,
    C,
}

/// Infinitesimal action: `A = d/dx`, `B = 2πix/ε`, `C = 2πi`.
pub fn lie_derivative(x: LieGenerator, f: &SchwartzVector, eps: f64) -> SchwartzVector {
    match x {
        LieGenerator::A => f.derivative(),
        LieGenerator::B => f.map(|a| a.mul_poly(&[Complex64::default(), I2PI / eps])),
        LieGenerator::C => f.scale(I2PI),
    }
}

/// `(a·δA + b·δB + c·δC) f`, collecting the `x`-linear part before
/// multiplying through so that cancellations are exact.
pub fn lie_combination(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    f: &SchwartzVector,
    eps: f64,
) -> SchwartzVector {
    f.map(|atom| {
        let dp: Vec<Complex64> = atom
            .poly
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &v)| v * k as f64 * a)
            .collect();
        let lin = [
            I2PI * (a * atom.beta + c),
            I2PI * (a * 2.0 * atom.alpha + b / eps),
        ];
        let mut poly = poly_add(&dp, &poly_mul(&atom.poly, &lin));
        trim(&mut poly);
        GaussianAtom { poly, ..atom.clone() }
    })
}

/// `f_τ(x) = e(τx²/(2ε))`.
pub fn holomorphic_vector(tau: Complex64, eps: f64) -> Result<GaussianAtom> {
    if tau.im <= 0.0 {
        return Err(Error::domain(format!("Im(τ) = {} must be positive", tau.im)));
    }
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::domain(format!("ε = {eps} must be positive")));
    }
    GaussianAtom::gaussian(tau / eps * 0.5, Complex64::default())
}

/// Dimension of the kernel of `δA − τδB` on `{p(x)·e(αx² + βx) : deg p ≤ n}`,
/// from the singular values of the coefficient matrix.
pub fn annihilator_kernel_dim(
    tau: Complex64,
    eps: f64,
    alpha: Complex64,
    beta: Complex64,
    max_degree: usize,
) -> usize {
    let cols = max_degree + 1;
    let rows = max_degree + 2;
    let mut m = DMatrix::<Complex64>::zeros(rows, cols);
    for k in 0..cols {
        let mut poly = vec![Complex64::default(); k + 1];
        poly[k] = Complex64::new(1.0, 0.0);
        let atom = GaussianAtom { poly, alpha, beta };
        let img = lie_combination(
            Complex64::new(1.0, 0.0),
            -tau,
            Complex64::default(),
            &SchwartzVector { atoms: vec![atom] },
            eps,
        );
        if let Some(a) = img.atoms.first() {
            for (j, &v) in a.poly.iter().enumerate() {
                m[(j, k)] = v;
            }
        }
    }
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max).max(1.0);
    cols - sv.iter().filter(|&&s| s > 1e-10 * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_atom() -> GaussianAtom {
        GaussianAtom::new(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.1, 0.0)], c(0.2, 0.7), c(-0.4, 0.3))
            .unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn real_group_example() {
        let a = HeisElement::Real(RealHeis::new(c(1.0, 0.0), (1.0, 0.0), 1.0).unwrap());
        let b = HeisElement::Real(RealHeis::new(c(1.0, 0.0), (0.0, 1.0), 1.0).unwrap());
        let HeisElement::Real(p) = group_mul(&a, &b).unwrap() else { panic!() };
        assert!(close(p.lambda, c(-1.0, 0.0), 1e-15));
        assert_eq!(p.y, (1.0, 1.0));
    }

    #[test]
    fn central_fiber() {
        let l = e(0.3);
        let m = e(0.45);
        let a = HeisElement::Real(RealHeis::new(l, (0.0, 0.0), 2.0).unwrap());
        let b = HeisElement::Real(RealHeis::new(m, (0.0, 0.0), 2.0).unwrap());
        let HeisElement::Real(p) = group_mul(&a, &b).unwrap() else { panic!() };
        assert!(close(p.lambda, l * m, 1e-15));
    }

    #[test]
    fn mismatched_groups() {
        let a = HeisElement::Real(RealHeis::new(c(1.0, 0.0), (0.0, 0.0), 2.0).unwrap());
        let b = HeisElement::Real(RealHeis::new(c(1.0, 0.0), (0.0, 0.0), 3.0).unwrap());
        let f = HeisElement::Finite(FiniteHeis::new(Ratio::from_integer(0), (1, 1), 5).unwrap());
        let g = HeisElement::Finite(FiniteHeis::new(Ratio::from_integer(0), (1, 1), 4).unwrap());
        assert!(group_mul(&a, &b).is_err());
        assert!(group_mul(&a, &f).is_err());
        assert!(group_mul(&f, &g).is_err());
        assert!(RealHeis::new(c(2.0, 0.0), (0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn translation_and_center() {
        let f = SchwartzVector::from_atom(sample_atom());
        let h = RealHeis::new(c(1.0, 0.0), (0.37, 0.0), 1.3).unwrap();
        let g = act_real(&h, &f);
        for x in [-1.0, 0.0, 0.4, 2.0] {
            assert!(close(g.eval(x), f.eval(x + 0.37), 1e-13));
        }
        let lam = e(0.21);
        let h = RealHeis::new(lam, (0.0, 0.0), 1.3).unwrap();
        let g = act_real(&h, &f);
        assert!(close(g.eval(0.3), lam * f.eval(0.3), 1e-14));
    }

    #[test]
    fn real_action_matches_pointwise_formula() {
        let f = SchwartzVector::from_atom(sample_atom());
        let eps = 0.8;
        let h = RealHeis::new(e(0.1), (0.6, -1.2), eps).unwrap();
        let g = act_real(&h, &f);
        for x in [-0.7, 0.0, 0.9] {
            let want = h.lambda * e((x * h.y.1 + h.y.0 * h.y.1 / 2.0) / eps) * f.eval(x + h.y.0);
            assert!(close(g.eval(x), want, 1e-13));
            assert_eq!(g.atoms[0].alpha, f.atoms[0].alpha);
        }
    }

    #[test]
    fn finite_shift_and_period() {
        let c5 = 5;
        let phi = FiniteVector::new(c5, (0..5).map(|k| c(k as f64, -(k as f64))).collect()).unwrap();
        let h = FiniteHeis::new(Ratio::from_integer(0), (2, 0), c5).unwrap();
        let out = act_finite(&h, &phi).unwrap();
        for n in 0..5 {
            assert_eq!(out.get(n), phi.get(n + 2));
        }
        let one = FiniteHeis::new(Ratio::from_integer(0), (1, 0), c5).unwrap();
        let mut v = phi.clone();
        for _ in 0..c5 {
            v = act_finite(&one, &v).unwrap();
        }
        assert_eq!(v, phi);
        let central = FiniteHeis::new(Ratio::new(1, 3), (0, 0), c5).unwrap();
        let out = act_finite(&central, &phi).unwrap();
        for n in 0..5 {
            assert!(close(out.get(n), e(1.0 / 3.0) * phi.get(n), 1e-15));
        }
        let wrong = FiniteHeis::new(Ratio::from_integer(0), (1, 0), 4).unwrap();
        assert!(act_finite(&wrong, &phi).is_err());
    }

    #[test]
    fn isotropy_examples() {
        for c in 2..=7 {
            let line: Vec<_> = (0..c).map(|n| (n, 0)).collect();
            assert_eq!(isotropic_check(&line, c).unwrap(), Isotropy::MaximalIsotropic);
            assert_eq!(isotropic_check(&[], c).unwrap(), Isotropy::Isotropic);
            assert_eq!(isotropic_check(&[(1, 0), (0, 1)], c).unwrap(), Isotropy::Neither);
        }
        // c = 4: the diagonal ⟨(1,1)⟩ is isotropic of order 4 = √16, hence maximal.
        assert_eq!(isotropic_check(&[(1, 1)], 4).unwrap(), Isotropy::MaximalIsotropic);
        assert_eq!(isotropic_check(&[(2, 0)], 4).unwrap(), Isotropy::Isotropic);
    }

    #[test]
    fn nondegenerate_for_small_moduli() {
        for c in 1..=12 {
            assert!(pairing_is_nondegenerate(c), "c = {c}");
        }
    }

    #[test]
    fn lie_derivative_examples() {
        let f = SchwartzVector::from_atom(sample_atom());
        let cf = lie_derivative(LieGenerator::C, &f, 0.7);
        assert!(close(cf.eval(0.2), I2PI * f.eval(0.2), 1e-14));

        let alpha = c(0.3, 0.8);
        let g = SchwartzVector::from_atom(GaussianAtom::gaussian(alpha, c(0.0, 0.0)).unwrap());
        let dg = lie_derivative(LieGenerator::A, &g, 1.0);
        assert_eq!(dg.atoms[0].poly, vec![c(0.0, 0.0), I2PI * 2.0 * alpha]);

        // derivative matches a central difference
        let d = lie_derivative(LieGenerator::A, &f, 1.0);
        let h = 1e-5;
        let fd = (f.eval(0.3 + h) - f.eval(0.3 - h)) / (2.0 * h);
        assert!(close(d.eval(0.3), fd, 1e-8));
    }

    #[test]
    fn holomorphic_vector_examples() {
        let f = holomorphic_vector(c(0.0, 1.0), 1.0).unwrap();
        assert!(close(f.eval(1.0), c((-PI).exp(), 0.0), 1e-15));
        assert!(((-PI).exp() - 0.0432139).abs() < 1e-7);
        let tau = c(0.3, 1.1);
        let ft = holomorphic_vector(tau, 0.9).unwrap();
        assert_eq!(ft.eval(0.0), c(1.0, 0.0));
        assert!(holomorphic_vector(c(0.0, -1.0), 1.0).is_err());
        assert!(holomorphic_vector(c(1.0, 0.0), 1.0).is_err());

        let v = SchwartzVector::from_atom(ft.clone());
        let ann = lie_combination(c(1.0, 0.0), -tau, c(0.0, 0.0), &v, 0.9);
        assert!(ann.is_zero());
    }

    #[test]
    fn annihilator_kernel_is_one_dimensional() {
        let tau = c(0.3, 1.1);
        let eps = 0.9;
        let ft = holomorphic_vector(tau, eps).unwrap();
        for n in 0..6 {
            assert_eq!(annihilator_kernel_dim(tau, eps, ft.alpha, ft.beta, n), 1);
        }
        // wrong α: nothing survives
        assert_eq!(annihilator_kernel_dim(tau, eps, ft.alpha * 2.0, c(0.0, 0.0), 4), 0);
    }

    #[test]
    fn atom_json() {
        let a = GaussianAtom::gaussian(c(0.0, 0.5), c(0.25, 0.0)).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"poly":[[1.0,0.0]],"alpha":[0.0,0.5],"beta":[0.25,0.0]}"#);
    }

    #[test]
    fn sup_bound_dominates_samples() {
        let a = sample_atom().translate(1.7).modulate(0.4);
        let bound = a.sup_bound();
        for k in -400..400 {
            let x = k as f64 * 0.02;
            assert!(a.eval(x).norm() <= bound * (1.0 + 1e-12));
        }
    }
}

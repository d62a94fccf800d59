//! The smooth noncommutative torus `𝒜_θ` on finitely supported coefficients.
//!
//! A monomial `(n, m)` stands for `UⁿVᵐ`, with `UV = e(θ)VU` where
//! `e(z) = exp(2πiz)`. Products of monomials follow
//! `(n, m)·(p, q) = ē(θmp)·(n+p, m+q)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::Precision;
use crate::qfield::QuadIrr;

/// `e(x) = exp(2πix)`.
pub fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * x)
}

/// `e(z)` for complex `z`.
pub fn e_complex(z: Complex64) -> Complex64 {
    (Complex64::new(0.0, 2.0 * PI) * z).exp()
}

/// `e(θk)`, reducing `θk mod 1` at the requested precision.
pub fn theta_phase(theta: &QuadIrr, k: i64, precision: Precision) -> Complex64 {
    e(theta.scaled_frac(k, precision))
}

/// Which derivation to apply.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Derivation {
    D1,
    D2,
    /// `δ_τ = τδ₁ + δ₂`.
    Tau(Complex64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorusElement {
    theta: QuadIrr,
    precision: Precision,
    coeffs: BTreeMap<(i64, i64), Complex64>,
}

impl TorusElement {
    pub fn zero(theta: QuadIrr) -> Self {
        TorusElement {
            theta,
            precision: Precision::default(),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one(theta: QuadIrr) -> Self {
        Self::monomial(theta, 0, 0, Complex64::new(1.0, 0.0))
    }

    /// `a·UⁿVᵐ`.
    pub fn monomial(theta: QuadIrr, n: i64, m: i64, a: Complex64) -> Self {
        let mut x = Self::zero(theta);
        x.add_term(n, m, a);
        x
    }

    pub fn u(theta: QuadIrr) -> Self {
        Self::monomial(theta, 1, 0, Complex64::new(1.0, 0.0))
    }

    pub fn v(theta: QuadIrr) -> Self {
        Self::monomial(theta, 0, 1, Complex64::new(1.0, 0.0))
    }

    pub fn from_terms(
        theta: QuadIrr,
        terms: impl IntoIterator<Item = ((i64, i64), Complex64)>,
    ) -> Self {
        let mut x = Self::zero(theta);
        for ((n, m), a) in terms {
            x.add_term(n, m, a);
        }
        x
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn theta(&self) -> &QuadIrr {
        &self.theta
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn coeff(&self, n: i64, m: i64) -> Complex64 {
        self.coeffs.get(&(n, m)).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i64, i64), Complex64)> + '_ {
        self.coeffs.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_term(&mut self, n: i64, m: i64, a: Complex64) {
        let entry = self.coeffs.entry((n, m)).or_default();
        *entry += a;
        if *entry == Complex64::default() {
            self.coeffs.remove(&(n, m));
        }
    }

    fn same_theta(&self, other: &Self) -> Result<()> {
        if self.theta != other.theta {
            return Err(Error::domain(format!(
                "elements over different θ: {} vs {}",
                self.theta, other.theta
            )));
        }
        Ok(())
    }

    fn finer_precision(&self, other: &Self) -> Precision {
        if self.precision == Precision::Extended || other.precision == Precision::Extended {
            Precision::Extended
        } else {
            Precision::Double
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_theta(other)?;
        let mut out = self.clone();
        out.precision = self.finer_precision(other);
        for (&(n, m), &a) in &other.coeffs {
            out.add_term(n, m, a);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.theta.clone()).with_precision(self.precision);
        for (&(n, m), &a) in &self.coeffs {
            out.add_term(n, m, a * s);
        }
        out
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.same_theta(other)?;
        let precision = self.finer_precision(other);
        let mut out = Self::zero(self.theta.clone()).with_precision(precision);
        for (&(n, m), &a) in &self.coeffs {
            for (&(p, q), &b) in &other.coeffs {
                let phase = theta_phase(&self.theta, -(m * p), precision);
                out.add_term(n + p, m + q, a * b * phase);
            }
        }
        Ok(out)
    }

    /// Involution: `(aUⁿVᵐ)* = conj(a)·ē(θnm)·U⁻ⁿV⁻ᵐ`.
    pub fn star(&self) -> Self {
        let mut out = Self::zero(self.theta.clone()).with_precision(self.precision);
        for (&(n, m), &a) in &self.coeffs {
            let phase = theta_phase(&self.theta, -(n * m), self.precision);
            out.add_term(-n, -m, a.conj() * phase);
        }
        out
    }

    /// Normalized trace: the coefficient of `1`.
    pub fn trace(&self) -> Complex64 {
        self.coeff(0, 0)
    }

    pub fn derive(&self, which: Derivation) -> Self {
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        let mut out = Self::zero(self.theta.clone()).with_precision(self.precision);
        for (&(n, m), &a) in &self.coeffs {
            let w = match which {
                Derivation::D1 => Complex64::from(n as f64),
                Derivation::D2 => Complex64::from(m as f64),
                Derivation::Tau(tau) => tau * n as f64 + m as f64,
            };
            out.add_term(n, m, a * two_pi_i * w);
        }
        out
    }

    /// Largest coefficient modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<_> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|&(n, m)| (self.coeff(n, m) - other.coeff(n, m)).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|a| a.norm()).fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    n: i64,
    m: i64,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct TorusRepr {
    theta: QuadIrr,
    #[serde(default)]
    precision: Precision,
    terms: Vec<TermRepr>,
}

impl Serialize for TorusElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TorusRepr {
            theta: self.theta.clone(),
            precision: self.precision,
            terms: self
                .terms()
                .map(|((n, m), a)| TermRepr { n, m, re: a.re, im: a.im })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TorusElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TorusRepr::deserialize(d)?;
        Ok(TorusElement::from_terms(
            repr.theta,
            repr.terms
                .into_iter()
                .map(|t| ((t.n, t.m), Complex64::new(t.re, t.im))),
        )
        .with_precision(repr.precision))
    }
}

//! Theta constants `ϑ_r(m) = Σ_n exp(πi(n+r)²m)` with rational
//! characteristic, summed to a certified truncation error.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-15;

/// Truncation counts beyond this are refused.
const MAX_N: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaQuery {
    pub r: Ratio<i64>,
    pub m: Complex64,
    pub tol: f64,
}

impl ThetaQuery {
    pub fn new(r: Ratio<i64>, m: Complex64, tol: f64) -> Result<Self> {
        if m.im <= 0.0 || !m.im.is_finite() {
            return Err(Error::domain(format!("Im(m) = {} must be positive", m.im)));
        }
        if tol <= 0.0 || tol.is_nan() {
            return Err(Error::domain(format!("tolerance {tol} must be positive")));
        }
        Ok(ThetaQuery {
            r: reduce_characteristic(r),
            m,
            tol,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaValue {
    pub value: Complex64,
    /// Bound on the modulus of the omitted terms.
    pub error_bound: f64,
    /// The sum runs over `|n| ≤ terms`.
    pub terms: u64,
}

/// `r mod 1` in `[0, 1)`.
pub fn reduce_characteristic(r: Ratio<i64>) -> Ratio<i64> {
    r - r.floor()
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Result<Ratio<i64>> {
    s.trim()
        .parse::<Ratio<i64>>()
        .map_err(|e| Error::Parse(format!("cannot parse '{s}' as p/q: {e}")))
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Subnormal terms carry only absolute accuracy, so bounds never go below the
/// smallest normal number.
fn clamp_positive(x: f64) -> f64 {
    x.max(f64::MIN_POSITIVE)
}

/// Relative inflation absorbing rounding in the exponent, which can reach
/// several hundred in magnitude.
const LOG_SLACK: f64 = 1e-11;

/// `log` of the two-sided geometric majorant with nearest distance `u₀` and
/// extra log-weight `shift`.
fn log_majorant(u0: f64, t: f64, shift: f64) -> f64 {
    let q = (-2.0 * PI * t * u0).exp();
    2f64.ln() + shift - PI * t * u0 * u0 - (-q).ln_1p() + LOG_SLACK
}

/// Upper bound for `Σ_{|n|>N} exp(−πt(n+r)²)`:
/// `2·exp(−πt s²)/(1 − exp(−2πt s))` with `s = N + 1 − |r|`.
pub fn tail_bound(n: u64, r: f64, t: f64) -> Result<f64> {
    if t <= 0.0 || !t.is_finite() {
        return Err(Error::domain(format!("t = {t} must be positive")));
    }
    if n == 0 {
        return Err(Error::domain("truncation N must be at least 1"));
    }
    let s = n as f64 + 1.0 - r.abs();
    if s <= 0.0 {
        return Err(Error::domain(format!("|r| = {} exceeds N + 1", r.abs())));
    }
    Ok(clamp_positive(log_majorant(s, t, 0.0).exp()))
}

/// Bound for the tail of `Σ exp(πi(n+r)²m + 2πi(n+r)z)` with `y = Im z`:
/// completing the square moves the peak to `−y/t` and multiplies by `exp(πy²/t)`.
fn shifted_tail_bound(n: u64, r: f64, t: f64, y: f64) -> Option<f64> {
    let u0 = n as f64 + 1.0 - r.abs() - y.abs() / t;
    (u0 > 0.0).then(|| clamp_positive(log_majorant(u0, t, PI * y * y / t).exp()))
}

fn choose_n(bound: impl Fn(u64) -> Option<f64>, tol: f64) -> Result<(u64, f64)> {
    let ok = |n: u64| bound(n).filter(|b| *b <= tol);
    let mut hi = 1u64;
    while ok(hi).is_none() {
        hi *= 2;
        if hi > MAX_N {
            return Err(Error::domain(format!(
                "tolerance {tol} needs more than {MAX_N} terms"
            )));
        }
    }
    let mut lo = hi / 2;
    // smallest N ≥ 1 meeting tol; the bound is nonincreasing in N.
    if lo == 0 {
        return Ok((hi, ok(hi).unwrap_or(0.0)));
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, ok(hi).unwrap_or(0.0)))
}

/// `ϑ_r(m) = Σ_{n∈ℤ} exp(πi(n+r)²m)`.
pub fn theta_const(q: &ThetaQuery) -> Result<ThetaValue> {
    theta_fn_with_tol(q.r, Complex64::default(), q.m, q.tol)
}

/// `Σ_{n∈ℤ} exp(πi(n+r)²m + 2πi(n+r)z)` to the default tolerance.
pub fn theta_fn(r: Ratio<i64>, z: Complex64, m: Complex64) -> Result<ThetaValue> {
    theta_fn_with_tol(r, z, m, DEFAULT_TOL)
}

pub fn theta_fn_with_tol(r: Ratio<i64>, z: Complex64, m: Complex64, tol: f64) -> Result<ThetaValue> {
    let q = ThetaQuery::new(r, m, tol)?;
    let rf = ratio_f64(q.r);
    let t = m.im;
    let (n, error_bound) = choose_n(|n| shifted_tail_bound(n, rf, t, z.im), tol)?;
    let pi_i = Complex64::new(0.0, PI);
    let mut value = Complex64::default();
    for k in -(n as i64)..=(n as i64) {
        let u = k as f64 + rf;
        value += (pi_i * (u * u * m + 2.0 * u * z)).exp();
    }
    Ok(ThetaValue {
        value,
        error_bound,
        terms: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i(y: f64) -> Complex64 {
        Complex64::new(0.0, y)
    }

    #[test]
    fn reference_value() {
        let q = ThetaQuery::new(Ratio::from_integer(0), i(1.0), 1e-15).unwrap();
        let v = theta_const(&q).unwrap();
        assert!((v.value.re - 1.086434811213308).abs() < 1e-13);
        assert!(v.value.im.abs() < 1e-15);
        assert!(v.error_bound <= 1e-15);
    }

    #[test]
    fn dominant_term() {
        let q = ThetaQuery::new(Ratio::from_integer(0), i(100.0), 1e-100).unwrap();
        let v = theta_const(&q).unwrap();
        assert_eq!(v.value, Complex64::new(1.0, 0.0));
        assert!(v.error_bound < 1e-100);
    }

    #[test]
    fn half_characteristics_agree() {
        let m = Complex64::new(0.3, 0.8);
        let a = theta_const(&ThetaQuery::new(Ratio::new(1, 2), m, 1e-15).unwrap()).unwrap();
        let b = theta_const(&ThetaQuery::new(Ratio::new(-1, 2), m, 1e-15).unwrap()).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn tail_bound_examples() {
        let b = tail_bound(5, 0.0, 1.0).unwrap();
        let truth: f64 = (6..=200).map(|n| 2.0 * (-PI * (n * n) as f64).exp()).sum();
        assert!(b >= truth);
        assert!(tail_bound(10, 0.0, 1.0).unwrap() < 1e-130);
        assert!(tail_bound(5, 0.0, 0.0).is_err());
        assert!(tail_bound(5, 0.0, -1.0).is_err());
    }

    #[test]
    fn reduction_and_parsing() {
        assert_eq!(reduce_characteristic(Ratio::new(-1, 3)), Ratio::new(2, 3));
        assert_eq!(reduce_characteristic(Ratio::new(7, 3)), Ratio::new(1, 3));
        assert_eq!(parse_rational("3/12").unwrap(), Ratio::new(1, 4));
        assert_eq!(parse_rational(" -2 ").unwrap(), Ratio::from_integer(-2));
        assert!(parse_rational("a/b").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn invalid_modular_argument() {
        assert!(ThetaQuery::new(Ratio::from_integer(0), Complex64::new(1.0, 0.0), 1e-10).is_err());
        assert!(theta_fn(Ratio::from_integer(0), Complex64::default(), Complex64::new(0.0, -1.0)).is_err());
    }

    #[test]
    fn z_zero_is_the_constant() {
        let m = Complex64::new(-0.2, 1.3);
        let r = Ratio::new(2, 7);
        let a = theta_fn(r, Complex64::default(), m).unwrap();
        let b = theta_const(&ThetaQuery::new(r, m, DEFAULT_TOL).unwrap()).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn quasi_periodicity() {
        let m = Complex64::new(0.3, 1.1);
        let r = Ratio::new(1, 5);
        let rf = 0.2;
        for z in [Complex64::new(0.1, 0.0), Complex64::new(-0.4, 0.3), Complex64::new(0.7, -0.2)] {
            let base = theta_fn(r, z, m).unwrap().value;
            let s1 = theta_fn(r, z + 1.0, m).unwrap().value;
            let want = base * Complex64::from_polar(1.0, 2.0 * PI * rf);
            assert!((s1 - want).norm() < 1e-12 * (1.0 + want.norm()));
            let sm = theta_fn(r, z + m, m).unwrap().value;
            let want = base * (Complex64::new(0.0, -PI) * m - Complex64::new(0.0, 2.0 * PI) * z).exp();
            assert!((sm - want).norm() < 1e-12 * (1.0 + want.norm()));
        }
    }
}

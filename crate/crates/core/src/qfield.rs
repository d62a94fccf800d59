//! Exact arithmetic in real quadratic fields.
//!
//! A [`QuadIrr`] is an element `(p + q√D)/r` of `ℚ(√D)` kept in a canonical
//! form (squarefree `D`, `r > 0`, `gcd(p, q, r) = 1`), so equality of values
//! is structural equality. On top of it this module provides the fractional
//! linear action of [`Sl2Matrix`], continued fractions, fixing matrices,
//! rank values `c_nθ + d_n` and the multiplier ring of `Γ_θ = ℤ ⊕ θℤ`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::precision::Precision;

/// Traces up to this bound are searched exhaustively by [`fixing_matrix`].
pub const TRACE_SEARCH_LIMIT: i64 = 100_000;

/// An element `(p + q√D)/r` of a real quadratic field.
///
/// Pure rationals (`q = 0`) may carry `D = 1`, meaning "no field attached";
/// they combine with any field. Equality ignores `D` when `q = 0`.
#[derive(Clone, Debug)]
pub struct QuadIrr {
    p: BigInt,
    q: BigInt,
    r: BigInt,
    d: BigInt,
}

fn squarefree_split(n: &BigInt) -> (BigInt, BigInt) {
    // n = s^2 * m with m squarefree; trial division is fine for the sizes used here.
    let mut m = n.clone();
    let mut s = BigInt::one();
    let mut f = BigInt::from(2);
    while &f * &f <= m {
        let sq = &f * &f;
        while (&m % &sq).is_zero() {
            m /= &sq;
            s *= &f;
        }
        f += 1;
    }
    (s, m)
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

impl QuadIrr {
    /// Builds `(p + q√d)/r`, extracting square factors from `d`.
    pub fn new(
        p: impl Into<BigInt>,
        q: impl Into<BigInt>,
        r: impl Into<BigInt>,
        d: impl Into<BigInt>,
    ) -> Result<Self> {
        let (p, mut q, r, d) = (p.into(), q.into(), r.into(), d.into());
        if r.is_zero() {
            return Err(Error::domain("denominator r must be nonzero"));
        }
        if d.is_negative() || d.is_zero() {
            return Err(Error::domain("radicand D must be positive"));
        }
        let (s, m) = squarefree_split(&d);
        q *= s;
        let (p, q) = if m.is_one() {
            // √d is an integer: the value is rational.
            (p + q, BigInt::zero())
        } else {
            (p, q)
        };
        Ok(Self::normalized(p, q, r, m))
    }

    fn normalized(mut p: BigInt, mut q: BigInt, mut r: BigInt, d: BigInt) -> Self {
        if r.is_negative() {
            p = -p;
            q = -q;
            r = -r;
        }
        let g = p.gcd(&q).gcd(&r);
        if !g.is_one() && !g.is_zero() {
            p /= &g;
            q /= &g;
            r /= &g;
        }
        QuadIrr { p, q, r, d }
    }

    /// A rational number `p/r` with no field attached.
    pub fn rational(p: impl Into<BigInt>, r: impl Into<BigInt>) -> Result<Self> {
        let (p, r) = (p.into(), r.into());
        if r.is_zero() {
            return Err(Error::domain("denominator r must be nonzero"));
        }
        Ok(Self::normalized(p, BigInt::zero(), r, BigInt::one()))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self::normalized(n.into(), BigInt::zero(), BigInt::one(), BigInt::one())
    }

    pub fn zero() -> Self {
        Self::from_integer(0)
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    /// `√d` for a positive integer `d`.
    pub fn sqrt(d: impl Into<BigInt>) -> Result<Self> {
        Self::new(0, 1, 1, d)
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    pub fn q(&self) -> &BigInt {
        &self.q
    }

    pub fn r(&self) -> &BigInt {
        &self.r
    }

    /// Squarefree radicand; `1` for a rational without an attached field.
    pub fn d(&self) -> &BigInt {
        &self.d
    }

    pub fn is_rational(&self) -> bool {
        self.q.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.q.is_zero() && self.r.is_one()
    }

    fn common_field(&self, other: &Self) -> Result<BigInt> {
        if self.q.is_zero() && other.q.is_zero() {
            // Keep whichever field is attached.
            return Ok(if self.d.is_one() {
                other.d.clone()
            } else {
                self.d.clone()
            });
        }
        if self.q.is_zero() || self.d.is_one() {
            return Ok(other.d.clone());
        }
        if other.q.is_zero() || other.d.is_one() || self.d == other.d {
            return Ok(self.d.clone());
        }
        Err(Error::domain(format!(
            "field mismatch: Q(sqrt {}) vs Q(sqrt {})",
            self.d, other.d
        )))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        let d = self.common_field(other)?;
        let p = &self.p * &other.r + &other.p * &self.r;
        let q = &self.q * &other.r + &other.q * &self.r;
        Ok(Self::normalized(p, q, &self.r * &other.r, d))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        let d = self.common_field(other)?;
        let p = &self.p * &other.p + &self.q * &other.q * &d;
        let q = &self.p * &other.q + &self.q * &other.p;
        Ok(Self::normalized(p, q, &self.r * &other.r, d))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&-other)
    }

    /// Galois conjugate `(p − q√D)/r`.
    pub fn conjugate(&self) -> Self {
        QuadIrr {
            p: self.p.clone(),
            q: -&self.q,
            r: self.r.clone(),
            d: self.d.clone(),
        }
    }

    /// Field norm `(p² − q²D)/r²` as a rational.
    pub fn norm(&self) -> QuadIrr {
        let num = &self.p * &self.p - &self.q * &self.q * &self.d;
        Self::normalized(num, BigInt::zero(), &self.r * &self.r, self.d.clone())
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::domain("division by zero in quadratic field"));
        }
        let n = &self.p * &self.p - &self.q * &self.q * &self.d;
        Ok(Self::normalized(
            &self.r * &self.p,
            -(&self.r * &self.q),
            n,
            self.d.clone(),
        ))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.checked_mul(&other.inv()?)
    }

    pub fn mul_int(&self, k: impl Into<BigInt>) -> Self {
        let k = k.into();
        Self::normalized(&self.p * &k, &self.q * &k, self.r.clone(), self.d.clone())
    }

    pub fn add_int(&self, k: impl Into<BigInt>) -> Self {
        let k = k.into();
        Self::normalized(
            &self.p + &k * &self.r,
            self.q.clone(),
            self.r.clone(),
            self.d.clone(),
        )
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = QuadIrr::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Sign of the value, decided exactly.
    pub fn signum(&self) -> i32 {
        let sp = sign_of(&self.p);
        let sq = sign_of(&self.q);
        if sq == 0 {
            return sp;
        }
        if sp == 0 || sp == sq {
            return sq;
        }
        let p2 = &self.p * &self.p;
        let q2d = &self.q * &self.q * &self.d;
        if p2 > q2d {
            sp
        } else {
            sq
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    /// `⌊value⌋`, exact.
    pub fn floor(&self) -> BigInt {
        let s = floor_q_sqrt_d(&self.q, &self.d);
        floor_div(&(&self.p + s), &self.r)
    }

    /// Double-precision approximation that avoids cancellation in `p + q√D`.
    pub fn to_f64(&self) -> f64 {
        let r = big_to_f64(&self.r);
        if self.q.is_zero() {
            return big_to_f64(&self.p) / r;
        }
        let sqrt_d = big_to_f64(&self.d).sqrt();
        let p = big_to_f64(&self.p);
        let q = big_to_f64(&self.q);
        if sign_of(&self.p) * sign_of(&self.q) < 0 {
            let n = &self.p * &self.p - &self.q * &self.q * &self.d;
            big_to_f64(&n) / (r * (p - q * sqrt_d))
        } else {
            (p + q * sqrt_d) / r
        }
    }

    /// `value mod 1` in `[0, 1)`, accurate to double precision for any size
    /// of the coefficients.
    pub fn frac_f64(&self) -> f64 {
        let n = &self.q * &self.q * &self.d;
        let root = n.sqrt();
        // f = |q|√D − root ∈ [0, 1), computed without cancellation.
        let rem = big_to_f64(&(&n - &root * &root));
        let f_pos = if rem == 0.0 {
            0.0
        } else {
            rem / (big_to_f64(&n).sqrt() + big_to_f64(&root))
        };
        let (s, f) = if self.q.is_negative() {
            if f_pos == 0.0 {
                (-root, 0.0)
            } else {
                (-root - 1, 1.0 - f_pos)
            }
        } else {
            (root, f_pos)
        };
        let whole = (&self.p + s).mod_floor(&self.r);
        let out = (big_to_f64(&whole) + f) / big_to_f64(&self.r);
        if out >= 1.0 {
            0.0
        } else {
            out
        }
    }

    /// `k·value mod 1`, reduced according to `precision`.
    pub fn scaled_frac(&self, k: i64, precision: Precision) -> f64 {
        match precision {
            Precision::Double => {
                let x = self.to_f64() * k as f64;
                x - x.floor()
            }
            Precision::Extended => self.mul_int(k).frac_f64(),
        }
    }

    /// Primitive integer polynomial `A x² + B x + C` (A > 0) vanishing at an
    /// irrational value.
    pub fn minimal_polynomial(&self) -> Result<(BigInt, BigInt, BigInt)> {
        if self.is_rational() {
            return Err(Error::domain("rational value has no quadratic minimal polynomial"));
        }
        let a = &self.r * &self.r;
        let b = BigInt::from(-2) * &self.p * &self.r;
        let c = &self.p * &self.p - &self.q * &self.q * &self.d;
        let g = a.gcd(&b).gcd(&c);
        Ok((a / &g, b / &g, c / &g))
    }

    fn to_i64_parts(&self) -> Option<(i64, i64, i64, i64)> {
        Some((
            self.p.to_i64()?,
            self.q.to_i64()?,
            self.r.to_i64()?,
            self.d.to_i64()?,
        ))
    }
}

fn sign_of(x: &BigInt) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

fn big_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(if x.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

/// `⌊q√D⌋` for squarefree `D`.
fn floor_q_sqrt_d(q: &BigInt, d: &BigInt) -> BigInt {
    if q.is_zero() {
        return BigInt::zero();
    }
    let n = q * q * d;
    let root = n.sqrt();
    if q.is_positive() {
        root
    } else if &root * &root == n {
        -root
    } else {
        -root - 1
    }
}

impl PartialEq for QuadIrr {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
            && self.q == other.q
            && self.r == other.r
            && (self.q.is_zero() || self.d == other.d)
    }
}

impl Eq for QuadIrr {}

impl Hash for QuadIrr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.p.hash(state);
        self.q.hash(state);
        self.r.hash(state);
        if !self.q.is_zero() {
            self.d.hash(state);
        }
    }
}

impl PartialOrd for QuadIrr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadIrr {
    /// Panics when the two values live in different quadratic fields.
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = self
            .checked_sub(other)
            .expect("comparison across different quadratic fields");
        diff.signum().cmp(&0)
    }
}

impl Neg for &QuadIrr {
    type Output = QuadIrr;
    fn neg(self) -> QuadIrr {
        QuadIrr {
            p: -&self.p,
            q: -&self.q,
            r: self.r.clone(),
            d: self.d.clone(),
        }
    }
}

impl Neg for QuadIrr {
    type Output = QuadIrr;
    fn neg(self) -> QuadIrr {
        -&self
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&QuadIrr> for &QuadIrr {
            type Output = QuadIrr;
            /// Panics when the operands live in different quadratic fields.
            fn $method(self, rhs: &QuadIrr) -> QuadIrr {
                self.$checked(rhs).expect("quadratic field mismatch")
            }
        }
        impl $trait<QuadIrr> for QuadIrr {
            type Output = QuadIrr;
            fn $method(self, rhs: QuadIrr) -> QuadIrr {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&QuadIrr> for QuadIrr {
            type Output = QuadIrr;
            fn $method(self, rhs: &QuadIrr) -> QuadIrr {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl fmt::Display for QuadIrr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = if self.q.is_zero() {
            format!("{}", self.p)
        } else {
            let rad = if self.q.is_one() {
                format!("sqrt{}", self.d)
            } else if (-&self.q).is_one() {
                format!("-sqrt{}", self.d)
            } else {
                format!("{}*sqrt{}", self.q, self.d)
            };
            if self.p.is_zero() {
                rad
            } else if self.q.is_positive() {
                format!("{}+{}", self.p, rad)
            } else {
                format!("{}{}", self.p, rad)
            }
        };
        if self.r.is_one() {
            write!(f, "{num}")
        } else if self.q.is_zero() || self.p.is_zero() && self.q.abs().is_one() {
            write!(f, "{num}/{}", self.r)
        } else {
            write!(f, "({num})/{}", self.r)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QuadIrrRepr {
    p: i64,
    q: i64,
    r: i64,
    #[serde(rename = "D")]
    d: i64,
}

impl Serialize for QuadIrr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let (p, q, r, d) = self
            .to_i64_parts()
            .ok_or_else(|| serde::ser::Error::custom("quadratic coefficients exceed i64"))?;
        QuadIrrRepr { p, q, r, d }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuadIrr {
    fn deserialize<De: Deserializer<'de>>(deserializer: De) -> std::result::Result<Self, De::Error> {
        let repr = QuadIrrRepr::deserialize(deserializer)?;
        QuadIrr::new(repr.p, repr.q, repr.r, repr.d).map_err(serde::de::Error::custom)
    }
}

impl FromStr for QuadIrr {
    type Err = Error;

    /// Accepts `(p+q*sqrtD)/r` and its abbreviations: `sqrt2`, `(1+sqrt5)/2`,
    /// `-5+3sqrt(7)`, `3/4`, `7`.
    fn from_str(s: &str) -> Result<Self> {
        parse_quadratic(s)
    }
}

fn parse_quadratic(input: &str) -> Result<QuadIrr> {
    let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    let err = |msg: &str| Error::Parse(format!("cannot parse '{input}' as (p+q*sqrtD)/r: {msg}"));
    if s.is_empty() {
        return Err(err("empty input"));
    }
    // Split off a trailing "/r" that is outside any parentheses.
    let mut depth = 0i32;
    let mut slash = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '/' if depth == 0 => {
                if slash.is_some() {
                    return Err(err("more than one '/'"));
                }
                slash = Some(i);
            }
            _ => {}
        }
        if depth < 0 {
            return Err(err("unbalanced parentheses"));
        }
    }
    if depth != 0 {
        return Err(err("unbalanced parentheses"));
    }
    let (num, den) = match slash {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (&s[..], None),
    };
    let r: BigInt = match den {
        Some(d) => d.parse().map_err(|_| err("denominator is not an integer"))?,
        None => BigInt::one(),
    };
    let num = if num.starts_with('(') && num.ends_with(')') && matching_outer(num) {
        &num[1..num.len() - 1]
    } else {
        num
    };

    let mut p = BigInt::zero();
    let mut q = BigInt::zero();
    let mut d: Option<BigInt> = None;
    for term in split_terms(num).map_err(|m| err(&m))? {
        let (neg, body) = match term.strip_prefix('-') {
            Some(b) => (true, b),
            None => (false, term.strip_prefix('+').unwrap_or(term)),
        };
        if let Some(pos) = body.find("sqrt") {
            let coef_str = body[..pos].trim_end_matches('*');
            let coef: BigInt = if coef_str.is_empty() {
                BigInt::one()
            } else {
                coef_str.parse().map_err(|_| err("bad coefficient of sqrt"))?
            };
            let rad_str = body[pos + 4..].trim_start_matches('(').trim_end_matches(')');
            let rad: BigInt = rad_str.parse().map_err(|_| err("bad radicand"))?;
            if let Some(prev) = &d {
                if *prev != rad {
                    return Err(err("more than one radicand"));
                }
            }
            d = Some(rad);
            q += if neg { -coef } else { coef };
        } else {
            let v: BigInt = body.parse().map_err(|_| err("bad integer term"))?;
            p += if neg { -v } else { v };
        }
    }
    match d {
        Some(d) => QuadIrr::new(p, q, r, d),
        None => QuadIrr::rational(p, r),
    }
}

fn matching_outer(s: &str) -> bool {
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 && i != s.len() - 1 {
                    return false;
                }
            }
            _ => {}
        }
    }
    true
}

fn split_terms(s: &str) -> std::result::Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' | '-' if depth == 0 && i > start => {
                out.push(&s[start..i]);
                start = i;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    if out.iter().any(|t| t.is_empty() || *t == "+" || *t == "-") {
        return Err("empty term".into());
    }
    Ok(out)
}

/// A matrix `[[a, b], [c, d]]` with determinant one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sl2Matrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Sl2Matrix {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let det = a as i128 * d as i128 - b as i128 * c as i128;
        if det != 1 {
            return Err(Error::domain(format!(
                "[[{a},{b}],[{c},{d}]] has determinant {det}, expected 1"
            )));
        }
        Ok(Sl2Matrix { a, b, c, d })
    }

    pub const IDENTITY: Sl2Matrix = Sl2Matrix {
        a: 1,
        b: 0,
        c: 0,
        d: 1,
    };

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    pub fn checked_mul(&self, o: &Sl2Matrix) -> Result<Sl2Matrix> {
        let f = |x: i64, y: i64, z: i64, w: i64| -> Result<i64> {
            let v = x as i128 * y as i128 + z as i128 * w as i128;
            i64::try_from(v).map_err(|_| Error::Overflow("SL2 matrix product"))
        };
        Ok(Sl2Matrix {
            a: f(self.a, o.a, self.b, o.c)?,
            b: f(self.a, o.b, self.b, o.d)?,
            c: f(self.c, o.a, self.d, o.c)?,
            d: f(self.c, o.b, self.d, o.d)?,
        })
    }

    pub fn pow(&self, n: u32) -> Result<Sl2Matrix> {
        let mut acc = Sl2Matrix::IDENTITY;
        for _ in 0..n {
            acc = acc.checked_mul(self)?;
        }
        Ok(acc)
    }

    pub fn inverse(&self) -> Sl2Matrix {
        Sl2Matrix {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn rows(&self) -> [[i64; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }
}

impl fmt::Display for Sl2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

impl Serialize for Sl2Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Sl2Matrix {
    fn deserialize<De: Deserializer<'de>>(deserializer: De) -> std::result::Result<Self, De::Error> {
        let [[a, b], [c, d]] = <[[i64; 2]; 2]>::deserialize(deserializer)?;
        Sl2Matrix::new(a, b, c, d).map_err(serde::de::Error::custom)
    }
}

impl FromStr for Sl2Matrix {
    type Err = Error;

    /// Parses `[[a,b],[c,d]]`.
    fn from_str(s: &str) -> Result<Self> {
        let nums: Vec<i64> = s
            .split(|c: char| c == '[' || c == ']' || c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("cannot parse '{s}' as [[a,b],[c,d]]")))?;
        if nums.len() != 4 || !s.trim_start().starts_with("[[") {
            return Err(Error::Parse(format!("cannot parse '{s}' as [[a,b],[c,d]]")));
        }
        Sl2Matrix::new(nums[0], nums[1], nums[2], nums[3])
    }
}

/// Fractional linear action `g·t = (at + b)/(ct + d)`.
pub fn moebius_act(g: &Sl2Matrix, t: &QuadIrr) -> Result<QuadIrr> {
    let num = t.mul_int(g.a).add_int(g.b);
    let den = t.mul_int(g.c).add_int(g.d);
    if den.is_zero() {
        return Err(Error::domain(format!("{g} has a pole at {t}")));
    }
    num.checked_div(&den)
}

/// Partial quotients of a quadratic irrationality together with the detected
/// period.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CfExpansion {
    /// Quotients computed before the first repeated state (or the cap).
    pub terms: Vec<BigInt>,
    /// Index into `terms` where the period starts, once a state repeated.
    pub period_start: Option<usize>,
}

impl CfExpansion {
    pub fn preperiod(&self) -> &[BigInt] {
        match self.period_start {
            Some(s) => &self.terms[..s],
            None => &self.terms,
        }
    }

    pub fn period(&self) -> Option<&[BigInt]> {
        self.period_start.map(|s| &self.terms[s..])
    }

    /// The first `count` partial quotients, continuing through the period.
    pub fn partial_quotients(&self, count: usize) -> Vec<BigInt> {
        let mut out: Vec<BigInt> = self.terms.iter().take(count).cloned().collect();
        if let Some(period) = self.period() {
            let mut i = 0;
            while out.len() < count && !period.is_empty() {
                out.push(period[i % period.len()].clone());
                i += 1;
            }
        }
        out
    }

    /// Convergents `p_k/q_k` for the first `count` quotients.
    pub fn convergents(&self, count: usize) -> Vec<(BigInt, BigInt)> {
        let mut out = Vec::with_capacity(count);
        let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
        let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
        for a in self.partial_quotients(count) {
            let p2 = &a * &p1 + &p0;
            let q2 = &a * &q1 + &q0;
            out.push((p2.clone(), q2.clone()));
            p0 = std::mem::replace(&mut p1, p2);
            q0 = std::mem::replace(&mut q1, q2);
        }
        out
    }
}

/// Exact continued-fraction expansion: floor, subtract, invert, and stop as
/// soon as a complete quotient repeats.
pub fn cf_expand(t: &QuadIrr, max_terms: usize) -> Result<CfExpansion> {
    if t.is_rational() {
        return Err(Error::domain(format!(
            "{t} is rational; continued fraction of a quadratic irrationality expected"
        )));
    }
    let mut seen: HashMap<QuadIrr, usize> = HashMap::new();
    let mut terms = Vec::new();
    let mut x = t.clone();
    for k in 0..max_terms {
        if let Some(&j) = seen.get(&x) {
            return Ok(CfExpansion {
                terms,
                period_start: Some(j),
            });
        }
        seen.insert(x.clone(), k);
        let a = x.floor();
        let frac = x.add_int(-&a);
        terms.push(a);
        x = frac.inv()?;
    }
    Ok(CfExpansion {
        terms,
        period_start: None,
    })
}

fn matrix_from_trace(
    t: i64,
    k: i64,
    (a2, b2, c2): (i64, i64, i64),
) -> Option<Sl2Matrix> {
    // (c, d − a, −b) = k·(A, B, C) and a + d = t.
    let kb = k.checked_mul(b2)?;
    if (t - kb).rem_euclid(2) != 0 {
        return None;
    }
    let a = (t.checked_sub(kb)?) / 2;
    let d = (t.checked_add(kb)?) / 2;
    let c = k.checked_mul(a2)?;
    let b = -(k.checked_mul(c2)?);
    Sl2Matrix::new(a, b, c, d).ok()
}

/// The fixing matrix of minimal trace with `c > 0`, `cθ + d > 0` and
/// `trace > 2`.
///
/// Traces are searched in increasing order up to [`TRACE_SEARCH_LIMIT`];
/// past that the search walks the convergents of `√Δ` (Δ the discriminant
/// of θ), which contain every solution of `t² − Δk² = 4` once `Δ > 16`.
pub fn fixing_matrix(theta: &QuadIrr) -> Result<Sl2Matrix> {
    let (a_big, b_big, c_big) = theta.minimal_polynomial()?;
    let disc: BigInt = &b_big * &b_big - BigInt::from(4) * &a_big * &c_big;
    let coeffs = (
        a_big.to_i64(),
        b_big.to_i64(),
        c_big.to_i64(),
        disc.to_i64(),
    );
    if let (Some(a2), Some(b2), Some(c2), Some(disc)) = coeffs {
        for t in 3..=TRACE_SEARCH_LIMIT {
            let num = t as i128 * t as i128 - 4;
            if num % disc as i128 != 0 {
                continue;
            }
            let k2 = num / disc as i128;
            let k = (k2 as f64).sqrt().round() as i128;
            let k = [k - 1, k, k + 1].into_iter().find(|&k| k > 0 && k * k == k2);
            let Some(k) = k else { continue };
            let Ok(k) = i64::try_from(k) else { continue };
            if let Some(g) = matrix_from_trace(t, k, (a2, b2, c2)) {
                if verify_fixing(&g, theta) {
                    return Ok(g);
                }
            }
        }
    }
    fixing_matrix_by_convergents(theta, &a_big, &b_big, &c_big, &disc)
}

fn fixing_matrix_by_convergents(
    theta: &QuadIrr,
    a_big: &BigInt,
    b_big: &BigInt,
    c_big: &BigInt,
    disc: &BigInt,
) -> Result<Sl2Matrix> {
    let root = QuadIrr::sqrt(disc.clone())?;
    let cf = cf_expand(&root, 10_000)?;
    let period_len = cf.period().map(|p| p.len()).unwrap_or(1);
    // Two full periods reach the fundamental solution of both Pell equations.
    let count = cf.preperiod().len() + 4 * period_len + 4;
    let four = BigInt::from(4);
    let mut best: Option<(BigInt, BigInt)> = None;
    for (p, q) in cf.convergents(count) {
        if let Some((_, k)) = &best {
            if &q > k {
                break;
            }
        }
        let n = &p * &p - disc * &q * &q;
        let cand = if n == four {
            Some((p.clone(), q.clone()))
        } else if n.is_one() {
            Some((&p * 2, &q * 2))
        } else {
            None
        };
        if let Some((t, k)) = cand {
            if t > BigInt::from(2)
                && (&t - &k * b_big).is_even()
                && best.as_ref().is_none_or(|(_, bk)| &k < bk)
            {
                best = Some((t, k));
            }
        }
    }
    let (t, k) = best.ok_or_else(|| Error::domain("no fixing matrix found"))?;
    let a = (&t - &k * b_big) / 2;
    let d = (&t + &k * b_big) / 2;
    let c = &k * a_big;
    let b = -(&k * c_big);
    let conv = |x: BigInt| x.to_i64().ok_or(Error::Overflow("fixing matrix entries"));
    let g = Sl2Matrix::new(conv(a)?, conv(b)?, conv(c)?, conv(d)?)?;
    if !verify_fixing(&g, theta) {
        return Err(Error::domain("convergent search produced a non-fixing matrix"));
    }
    Ok(g)
}

fn verify_fixing(g: &Sl2Matrix, theta: &QuadIrr) -> bool {
    g.c > 0
        && g.trace() > 2
        && theta.mul_int(g.c).add_int(g.d).is_positive()
        && moebius_act(g, theta).is_ok_and(|v| &v == theta)
}

/// `true` when `g·t = t` exactly.
pub fn fixes(g: &Sl2Matrix, t: &QuadIrr) -> bool {
    moebius_act(g, t).is_ok_and(|v| &v == t)
}

/// `c_nθ + d_n` where `g^n = [[a_n, b_n], [c_n, d_n]]`.
pub fn rank_value(g: &Sl2Matrix, n: u32, t: &QuadIrr) -> Result<QuadIrr> {
    if !fixes(g, t) {
        return Err(Error::domain(format!("{g} does not fix {t}")));
    }
    let gn = g.pow(n)?;
    Ok(t.mul_int(gn.c).add_int(gn.d))
}

/// An element `m + nθ` of `Γ_θ = ℤ ⊕ θℤ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeElement {
    pub m: BigInt,
    pub n: BigInt,
}

impl LatticeElement {
    pub fn new(m: impl Into<BigInt>, n: impl Into<BigInt>) -> Self {
        LatticeElement {
            m: m.into(),
            n: n.into(),
        }
    }

    pub fn value(&self, theta: &QuadIrr) -> QuadIrr {
        theta.mul_int(self.n.clone()).add_int(self.m.clone())
    }

    /// Coordinates of `x` in the basis `{1, θ}`, when `x ∈ Γ_θ`.
    pub fn coordinates(x: &QuadIrr, theta: &QuadIrr) -> Option<LatticeElement> {
        if theta.is_rational() {
            return None;
        }
        if !x.is_rational() && x.d() != theta.d() {
            return None;
        }
        // n = (x_q / x_r) / (θ_q / θ_r)
        let n = QuadIrr::rational(x.q() * theta.r(), x.r() * theta.q()).ok()?;
        if !n.is_integer() {
            return None;
        }
        let rest = x.checked_sub(&theta.mul_int(n.p().clone())).ok()?;
        if !rest.is_integer() {
            return None;
        }
        Some(LatticeElement::new(rest.p().clone(), n.p().clone()))
    }
}

impl std::ops::Add for &LatticeElement {
    type Output = LatticeElement;
    fn add(self, rhs: &LatticeElement) -> LatticeElement {
        LatticeElement::new(&self.m + &rhs.m, &self.n + &rhs.n)
    }
}

/// `{α : αΓ_θ ⊆ Γ_θ} = ℤ + f·O_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplierRing {
    pub theta: QuadIrr,
    /// Discriminant of the primitive minimal polynomial of θ.
    pub discriminant: BigInt,
    /// Discriminant of the maximal order of `ℚ(θ)`.
    pub field_discriminant: BigInt,
    pub conductor: BigInt,
}

impl MultiplierRing {
    /// Exact test of `α·1 ∈ Γ_θ` and `α·θ ∈ Γ_θ`.
    pub fn contains(&self, alpha: &QuadIrr) -> bool {
        let Ok(at) = alpha.checked_mul(&self.theta) else {
            return false;
        };
        LatticeElement::coordinates(alpha, &self.theta).is_some()
            && LatticeElement::coordinates(&at, &self.theta).is_some()
    }

    /// Generator `ω` of the maximal order `ℤ[ω]`.
    pub fn maximal_order_generator(&self) -> QuadIrr {
        let d = self.theta.d().clone();
        if (&d % 4u32) == BigInt::one() {
            QuadIrr::new(1, 1, 2, d).expect("valid")
        } else {
            QuadIrr::new(0, 1, 1, d).expect("valid")
        }
    }
}

pub fn multiplier_ring(t: &QuadIrr) -> Result<MultiplierRing> {
    let (a, b, c) = t.minimal_polynomial()?;
    let disc = &b * &b - BigInt::from(4) * &a * &c;
    let d = t.d().clone();
    let field_disc = if (&d % 4u32) == BigInt::one() {
        d
    } else {
        d * 4
    };
    let ratio = &disc / &field_disc;
    let f = ratio.sqrt();
    if &f * &f * &field_disc != disc {
        return Err(Error::domain("discriminant is not a square multiple of the field discriminant"));
    }
    Ok(MultiplierRing {
        theta: t.clone(),
        discriminant: disc,
        field_discriminant: field_disc,
        conductor: f,
    })
}

/// Standing data of a real-multiplication torus: θ, a matrix fixing it with
/// `c > 0` and `cθ + d > 0`, and `ε = (cθ + d)/c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RmData {
    pub theta: QuadIrr,
    pub g: Sl2Matrix,
    pub epsilon: QuadIrr,
}

impl RmData {
    pub fn new(theta: QuadIrr, g: Sl2Matrix) -> Result<Self> {
        if theta.is_rational() {
            return Err(Error::domain(format!("θ = {theta} is rational")));
        }
        if !fixes(&g, &theta) {
            return Err(Error::domain(format!("{g} does not fix θ = {theta}")));
        }
        if g.c <= 0 {
            return Err(Error::domain(format!("{g} must have c > 0")));
        }
        let rank = theta.mul_int(g.c).add_int(g.d);
        if !rank.is_positive() {
            return Err(Error::domain(format!("cθ + d = {rank} must be positive")));
        }
        let epsilon = rank.checked_div(&QuadIrr::from_integer(g.c))?;
        Ok(RmData { theta, g, epsilon })
    }

    /// Uses [`fixing_matrix`] for `g`.
    pub fn from_theta(theta: QuadIrr) -> Result<Self> {
        let g = fixing_matrix(&theta)?;
        Self::new(theta, g)
    }

    pub fn rank(&self) -> QuadIrr {
        self.theta.mul_int(self.g.c).add_int(self.g.d)
    }

    /// `g` has trace above two, i.e. two positive real eigenvalues.
    pub fn has_positive_eigenvalues(&self) -> bool {
        self.g.trace() > 2
    }

    /// Inequalities `c ≥ a+d`, `c ≥ a+d+1`, `c ≥ a+d+2` gating generation,
    /// quadraticity and Koszulity of the coordinate ring.
    pub fn ring_conditions(&self) -> RingConditions {
        let pos = self.has_positive_eigenvalues();
        let (c, t) = (self.g.c, self.g.trace());
        RingConditions {
            generated: pos && c >= t,
            quadratic: pos && c > t,
            koszul: pos && c >= t + 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RingConditions {
    #[serde(rename = "gen")]
    pub generated: bool,
    #[serde(rename = "quad")]
    pub quadratic: bool,
    pub koszul: bool,
}

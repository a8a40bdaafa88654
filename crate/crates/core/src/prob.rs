//! Probability values and the arithmetic they are evaluated in.
//!
//! Config files may give probabilities either as exact fractions (`"3/4"`) or
//! as plain floating point numbers. [`Prob`] keeps the distinction so that the
//! exact oracles can run in rational arithmetic whenever every input allows
//! it, and fall back to `f64` otherwise. The [`Weight`] trait abstracts over
//! the two arithmetics.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Absolute tolerance used for normalization and mean checks in float mode.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

/// A probability (or any other non-negative parameter such as a mean),
/// either exact or floating point.
#[derive(Debug, Clone, PartialEq)]
pub enum Prob {
    Exact(BigRational),
    Float(f64),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("cannot parse {input:?} as a probability: {reason}")]
pub struct ParseProbError {
    pub input: String,
    pub reason: &'static str,
}

/// Raised when an exact computation is requested on a float-valued input.
#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
#[error("value is not exactly representable in rational arithmetic")]
pub struct NotExact;

impl Prob {
    /// Exact `num/den`. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Prob {
        Prob::Exact(BigRational::new(num.into(), den.into()))
    }

    pub fn integer(v: i64) -> Prob {
        Prob::Exact(BigRational::from_integer(v.into()))
    }

    pub fn float(v: f64) -> Prob {
        Prob::Float(v)
    }

    pub fn zero() -> Prob {
        Prob::integer(0)
    }

    pub fn one() -> Prob {
        Prob::integer(1)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Prob::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Prob::Exact(r) => Some(r),
            Prob::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Prob::Exact(r) => ToPrimitive::to_f64(r).unwrap_or(f64::NAN),
            Prob::Float(v) => *v,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Prob::Exact(_) => true,
            Prob::Float(v) => v.is_finite(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Prob::Exact(r) => r.is_negative(),
            Prob::Float(v) => *v < 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Prob::Exact(r) => r.is_zero(),
            Prob::Float(v) => *v == 0.0,
        }
    }

    /// Whether the value lies in `[0, 1]`.
    pub fn is_unit(&self) -> bool {
        match self {
            Prob::Exact(r) => !r.is_negative() && *r <= BigRational::one(),
            Prob::Float(v) => (0.0..=1.0).contains(v),
        }
    }

    /// Equality: exact when both sides are exact, within [`FLOAT_TOLERANCE`]
    /// otherwise.
    pub fn close_to(&self, other: &Prob) -> bool {
        match (self, other) {
            (Prob::Exact(a), Prob::Exact(b)) => a == b,
            _ => (self.to_f64() - other.to_f64()).abs() <= FLOAT_TOLERANCE,
        }
    }

    /// Evaluates `f` in rational arithmetic when every input is exact, in
    /// `f64` otherwise.
    pub fn combine<'a, I, FE, FF>(inputs: I, exact: FE, float: FF) -> Prob
    where
        I: IntoIterator<Item = &'a Prob>,
        FE: FnOnce(Vec<BigRational>) -> BigRational,
        FF: FnOnce(Vec<f64>) -> f64,
    {
        let inputs: Vec<&Prob> = inputs.into_iter().collect();
        if inputs.iter().all(|p| p.is_exact()) {
            let vals = inputs
                .iter()
                .map(|p| p.as_exact().cloned().unwrap())
                .collect();
            Prob::Exact(exact(vals))
        } else {
            Prob::Float(float(inputs.iter().map(|p| p.to_f64()).collect()))
        }
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prob::Exact(r) => write!(f, "{}", render_rational(r)),
            Prob::Float(v) => write!(f, "{v}"),
        }
    }
}

fn render_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl FromStr for Prob {
    type Err = ParseProbError;

    /// Accepts `"num/den"` fractions and plain decimals such as `"0.75"` or
    /// `"-1.5e-3"`. Both forms parse to exact rationals.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| ParseProbError {
            input: s.to_string(),
            reason,
        };
        let t = s.trim();
        if t.is_empty() {
            return Err(err("empty string"));
        }
        if let Some((num, den)) = t.split_once('/') {
            let num: BigInt = num.trim().parse().map_err(|_| err("bad numerator"))?;
            let den: BigInt = den.trim().parse().map_err(|_| err("bad denominator"))?;
            if den.is_zero() {
                return Err(err("zero denominator"));
            }
            return Ok(Prob::Exact(BigRational::new(num, den)));
        }
        parse_decimal(t).map(Prob::Exact).ok_or_else(|| err("not a fraction or decimal"))
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(all * num::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

/// Arithmetic used by the exact oracles: `BigRational` for exact runs, `f64`
/// otherwise.
pub trait Weight:
    Clone
    + fmt::Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// `true` for rational arithmetic.
    const EXACT: bool;

    fn from_prob(p: &Prob) -> Result<Self, NotExact>;
    fn from_i64(v: i64) -> Self;
    fn from_f64(v: f64) -> Result<Self, NotExact>;
    fn to_f64(&self) -> f64;
    /// `e^self`; `None` where the arithmetic cannot represent it.
    fn exp(&self) -> Option<Self>;
    fn abs(&self) -> Self;
    /// Exact equality for rationals, `|a - b| <= 1e-12` for floats.
    fn approx_eq(&self, other: &Self) -> bool;
    /// Human readable rendering (`"1/6"` for rationals).
    fn render(&self) -> String;
}

impl Weight for f64 {
    const EXACT: bool = false;

    fn from_prob(p: &Prob) -> Result<Self, NotExact> {
        Ok(p.to_f64())
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_f64(v: f64) -> Result<Self, NotExact> {
        Ok(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn exp(&self) -> Option<Self> {
        Some(f64::exp(*self))
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOLERANCE
    }

    fn render(&self) -> String {
        format!("{self}")
    }
}

impl Weight for BigRational {
    const EXACT: bool = true;

    fn from_prob(p: &Prob) -> Result<Self, NotExact> {
        p.as_exact().cloned().ok_or(NotExact)
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(v.into())
    }

    fn from_f64(v: f64) -> Result<Self, NotExact> {
        BigRational::from_float(v).ok_or(NotExact)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn exp(&self) -> Option<Self> {
        if self.is_zero() {
            Some(BigRational::one())
        } else {
            None
        }
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn render(&self) -> String {
        render_rational(self)
    }
}

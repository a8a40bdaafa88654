//! Chernoff/Hoeffding tail bounds for the random walk and the derived
//! quantile bound for branching random walks.
//!
//! The canonical form is one-sided: for independent steps with ranges `w_i`,
//! `P(S_n - na >= λ) <= exp(-2λ² / Σ w_i²)`. Writing this as `exp(-cλ²/n)`
//! fixes `c = 2n / Σ w_i²`. Per-tree quantiles then satisfy
//! `P(|Q_n(α) - na| >= λ) <= 2 exp(-cλ²/2n)` for every
//! `α ∈ [exp(-cλ²/2n), 1 - exp(-cλ²/2n)]`.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BoundsError {
    #[error("all step ranges are zero; the walk is deterministic")]
    DegenerateWalk,
    #[error("no step ranges given")]
    NoRanges,
    #[error("c must be positive and finite, got {0}")]
    InvalidC(f64),
    #[error("n must be at least 1")]
    InvalidN,
    #[error("lambda must be non-negative and finite, got {0}")]
    InvalidLambda(f64),
}

/// Exponent constant `c`, generation count `n` and deviation `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub c: f64,
    pub n: usize,
    pub lambda: f64,
}

impl BoundParams {
    pub fn new(c: f64, n: usize, lambda: f64) -> Result<Self, BoundsError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(BoundsError::InvalidC(c));
        }
        if n == 0 {
            return Err(BoundsError::InvalidN);
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(BoundsError::InvalidLambda(lambda));
        }
        Ok(BoundParams { c, n, lambda })
    }

    /// `cλ²/n`.
    pub fn exponent(&self) -> f64 {
        self.c * self.lambda * self.lambda / self.n as f64
    }
}

/// `c = 2n / Σ w_i²`, so that `exp(-cλ²/n)` is the one-sided Hoeffding bound.
pub fn hoeffding_constant(ranges: &[u64]) -> Result<f64, BoundsError> {
    if ranges.is_empty() {
        return Err(BoundsError::NoRanges);
    }
    let sum_sq: f64 = ranges.iter().map(|&w| (w as f64) * (w as f64)).sum();
    if sum_sq == 0.0 {
        return Err(BoundsError::DegenerateWalk);
    }
    Ok(2.0 * ranges.len() as f64 / sum_sq)
}

/// One-sided random-walk bound `min(1, exp(-cλ²/n))`.
pub fn rw_bound(p: &BoundParams) -> f64 {
    (-p.exponent()).exp().min(1.0)
}

/// Admissible quantile levels `[lo, hi]`; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaWindow {
    pub lo: f64,
    pub hi: f64,
}

impl AlphaWindow {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, alpha: f64) -> bool {
        self.lo <= alpha && alpha <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBound {
    /// `min(1, 2 exp(-cλ²/2n))`.
    pub two_sided: f64,
    /// `exp(-cλ²/2n)`, the bound on each side.
    pub one_sided: f64,
    pub window: AlphaWindow,
}

/// Quantile deviation bound and its admissible α-window.
pub fn theorem_bound(p: &BoundParams) -> TheoremBound {
    let one_sided = (-p.exponent() / 2.0).exp();
    TheoremBound {
        two_sided: (2.0 * one_sided).min(1.0),
        one_sided,
        window: AlphaWindow {
            lo: one_sided,
            hi: 1.0 - one_sided,
        },
    }
}

/// Exact Hoeffding exponent `2λ² / Σ w_i²`.
pub fn hoeffding_exponent(lambda: &BigRational, ranges: &[u64]) -> Result<BigRational, BoundsError> {
    let sum_sq: BigInt = ranges.iter().map(|&w| BigInt::from(w) * BigInt::from(w)).sum();
    if sum_sq.is_zero() {
        return Err(BoundsError::DegenerateWalk);
    }
    Ok(BigRational::from_integer(2.into()) * lambda * lambda / BigRational::from_integer(sum_sq))
}

// 1/e = 0.36787944117144232159552377016146...
fn inv_e_bounds() -> (BigRational, BigRational) {
    let den = BigInt::from(10u64).pow(20);
    (
        BigRational::new(BigInt::from(36_787_944_117_144_232_159u128), den.clone()),
        BigRational::new(BigInt::from(36_787_944_117_144_232_160u128), den),
    )
}

/// Rational enclosure `lo <= exp(-y) <= hi` for `y >= 0`.
///
/// `y` is split into its integer part `m` and fraction `f`; `exp(-m)` is
/// bracketed by powers of a 20-digit enclosure of `1/e`, and `exp(-f)` by
/// partial sums of its alternating Taylor series (terms decrease for
/// `f < 1`, so odd and even truncations bracket the limit).
pub fn exp_neg_bounds(y: &BigRational) -> (BigRational, BigRational) {
    assert!(!y.is_negative(), "exp_neg_bounds needs y >= 0");
    let m = y.floor();
    let f = y - &m;
    let m = m.to_integer().to_usize().expect("exponent fits in usize");
    let (e_lo, e_hi) = inv_e_bounds();
    let int_lo = num::pow(e_lo, m);
    let int_hi = num::pow(e_hi, m);

    let mut partial = BigRational::one();
    let mut term = BigRational::one();
    let mut sums = Vec::with_capacity(32);
    for k in 1..=30u32 {
        term = -term * &f / BigRational::from_integer(k.into());
        partial = &partial + &term;
        sums.push(partial.clone());
    }
    // sums[k-1] is the partial sum through degree k
    let frac_lo = sums[28].clone(); // degree 29, last term negative
    let frac_hi = sums[29].clone(); // degree 30, last term positive
    (int_lo * frac_lo, int_hi * frac_hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// `value <= exp(-y)` proven.
    Holds,
    /// `value > exp(-y)` proven.
    Violated,
    /// `value` lies inside the enclosure of `exp(-y)`.
    Undecided,
}

/// Decides `value <= exp(-y)` in exact rational arithmetic.
pub fn certify_le_exp_neg(value: &BigRational, y: &BigRational) -> Certificate {
    let (lo, hi) = exp_neg_bounds(y);
    if *value <= lo {
        Certificate::Holds
    } else if *value > hi {
        Certificate::Violated
    } else {
        Certificate::Undecided
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn hoeffding_constant_examples() {
        assert_eq!(hoeffding_constant(&[2, 2, 2]).unwrap(), 0.5);
        assert_eq!(hoeffding_constant(&[1]).unwrap(), 2.0);
        assert_eq!(hoeffding_constant(&[2, 0, 2]).unwrap(), 0.75);
        assert_eq!(hoeffding_constant(&[0, 0]), Err(BoundsError::DegenerateWalk));
        assert_eq!(hoeffding_constant(&[]), Err(BoundsError::NoRanges));
    }

    #[test]
    fn rw_bound_examples() {
        assert_eq!(rw_bound(&BoundParams::new(0.5, 2, 0.0).unwrap()), 1.0);
        let b = rw_bound(&BoundParams::new(0.5, 2, 2.0).unwrap());
        assert!((b - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn params_are_validated() {
        assert!(BoundParams::new(0.0, 1, 1.0).is_err());
        assert!(BoundParams::new(1.0, 0, 1.0).is_err());
        assert!(BoundParams::new(1.0, 1, -1.0).is_err());
        assert!(BoundParams::new(f64::NAN, 1, 1.0).is_err());
    }

    #[test]
    fn theorem_bound_examples() {
        let zero = theorem_bound(&BoundParams::new(0.5, 16, 0.0).unwrap());
        assert_eq!(zero.two_sided, 1.0);
        assert_eq!((zero.window.lo, zero.window.hi), (1.0, 0.0));
        assert!(zero.window.is_empty());

        let t = theorem_bound(&BoundParams::new(0.5, 16, 8.0).unwrap());
        let e1 = (-1.0f64).exp();
        assert!((t.two_sided - 2.0 * e1).abs() < 1e-15);
        assert!((t.window.lo - e1).abs() < 1e-15);
        assert!((t.window.hi - (1.0 - e1)).abs() < 1e-15);
        assert!(t.window.contains(0.5) && !t.window.contains(0.25));
        assert_eq!(t.window.lo, t.one_sided);
    }

    #[test]
    fn window_nonempty_iff_exponent_exceeds_ln2() {
        for lambda in 0..40 {
            let p = BoundParams::new(0.5, 16, lambda as f64 * 0.25).unwrap();
            let t = theorem_bound(&p);
            let x = p.exponent() / 2.0;
            if (x - std::f64::consts::LN_2).abs() > 1e-12 {
                assert_eq!(!t.window.is_empty(), x > std::f64::consts::LN_2, "λ={}", p.lambda);
            }
        }
    }

    #[test]
    fn exp_enclosure_is_tight_and_ordered() {
        for (n, d) in [(0, 1), (1, 2), (1, 1), (7, 3), (32, 1), (12345, 1000)] {
            let y = r(n, d);
            let (lo, hi) = exp_neg_bounds(&y);
            assert!(lo <= hi);
            let truth = (-(n as f64) / d as f64).exp();
            let (lo, hi) = (lo.to_f64().unwrap(), hi.to_f64().unwrap());
            assert!(lo <= truth * (1.0 + 1e-15) && truth <= hi * (1.0 + 1e-15));
            assert!((hi - lo) <= truth * 1e-15, "{n}/{d}: {lo} {hi}");
        }
        assert_eq!(exp_neg_bounds(&r(0, 1)), (r(1, 1), r(1, 1)));
    }

    #[test]
    fn certificates() {
        // exp(-1) ≈ 0.3679
        assert_eq!(certify_le_exp_neg(&r(1, 4), &r(1, 1)), Certificate::Holds);
        assert_eq!(certify_le_exp_neg(&r(1, 2), &r(1, 1)), Certificate::Violated);
        assert_eq!(certify_le_exp_neg(&r(1, 1), &r(0, 1)), Certificate::Holds);
        assert_eq!(hoeffding_exponent(&r(2, 1), &[2, 2]).unwrap(), r(1, 1));
    }
}

//! Per-tree empirical statistics over the generation-`n` leaves.
//!
//! For a tree with leaf multiset `{z_1, .., z_Z}`:
//!
//! * `F(t) = #{z_i <= t} / Z` ([`ecdf`]),
//! * `Q(a) = inf { t : F(t) >= a }` ([`quantile`]),
//! * `p(thr) = #{z_i >= thr} / Z` ([`exceedance`]).
//!
//! On the grid `a = k / Z` these satisfy
//! `p(na + λ) >= a  <=>  Q(1 - a) >= na + λ`, which links the fraction of
//! far-out leaves to the position of a quantile.
//!
//! Proportions are computed as `count as f64 / Z as f64` everywhere, so two
//! levels that are equal as rationals compare equal as floats.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulator::{ForestSample, LeafHistogram};
use crate::stats::{wilson_interval, Interval};

/// Confidence level of the reported Wilson intervals.
pub const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, Error, PartialEq)]
pub enum EmpiricsError {
    #[error("undefined on extinct tree")]
    Extinct,
    #[error("quantile level {0} outside (0, 1]")]
    InvalidLevel(f64),
    #[error("forest has no surviving trees")]
    NoSurvivors,
}

fn surviving(h: &LeafHistogram) -> Result<f64, EmpiricsError> {
    if h.is_empty() {
        Err(EmpiricsError::Extinct)
    } else {
        Ok(h.total() as f64)
    }
}

/// Empirical CDF `F(t)`.
pub fn ecdf(h: &LeafHistogram, t: i64) -> Result<f64, EmpiricsError> {
    let z = surviving(h)?;
    let below: u64 = h.counts().range(..=t).map(|(_, c)| c).sum();
    Ok(below as f64 / z)
}

/// Smallest leaf position `t` with `F(t) >= a`.
pub fn quantile(h: &LeafHistogram, a: f64) -> Result<i64, EmpiricsError> {
    let z = surviving(h)?;
    if !(a > 0.0 && a <= 1.0) {
        return Err(EmpiricsError::InvalidLevel(a));
    }
    let mut cum = 0u64;
    for (&x, &c) in h.counts() {
        cum += c;
        if cum as f64 / z >= a {
            return Ok(x);
        }
    }
    // F(max) = 1 >= a
    Ok(h.max_position().expect("non-empty"))
}

/// Fraction of leaves at positions `>= threshold`.
pub fn exceedance(h: &LeafHistogram, threshold: f64) -> Result<f64, EmpiricsError> {
    let z = surviving(h)?;
    let above: u64 = h
        .counts()
        .iter()
        .filter(|(&x, _)| x as f64 >= threshold)
        .map(|(_, c)| c)
        .sum();
    Ok(above as f64 / z)
}

/// Observed frequency of quantile deviations over the surviving trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationEstimate {
    pub alpha: f64,
    pub lambda: f64,
    /// Fraction of trees with `Q(α) - na >= λ`.
    pub rate_upper: f64,
    /// Fraction of trees with `Q(α) - na <= -λ`.
    pub rate_lower: f64,
    /// Fraction of trees with `|Q(α) - na| >= λ`.
    pub rate_two_sided: f64,
    pub ci_upper: Interval,
    pub ci_lower: Interval,
    pub ci_two_sided: Interval,
    pub trees_used: u64,
}

/// Quantile deviation rates of `forest` at level `a` around the center `na`.
pub fn deviation_rate(
    forest: &ForestSample,
    a: f64,
    lambda: f64,
    na: f64,
) -> Result<DeviationEstimate, EmpiricsError> {
    let quantiles = forest
        .surviving
        .iter()
        .map(|t| quantile(t.leaves.as_ref().ok_or(EmpiricsError::Extinct)?, a))
        .collect::<Result<Vec<_>, _>>()?;
    deviation_rate_from_quantiles(&quantiles, a, lambda, na)
}

/// [`deviation_rate`] on precomputed per-tree quantiles.
pub fn deviation_rate_from_quantiles(
    quantiles: &[i64],
    a: f64,
    lambda: f64,
    na: f64,
) -> Result<DeviationEstimate, EmpiricsError> {
    if quantiles.is_empty() {
        return Err(EmpiricsError::NoSurvivors);
    }
    let (mut up, mut down, mut either) = (0u64, 0u64, 0u64);
    for &q in quantiles {
        let d = q as f64 - na;
        let u = d >= lambda;
        let l = d <= -lambda;
        up += u as u64;
        down += l as u64;
        either += (u || l) as u64;
    }
    let m = quantiles.len() as u64;
    let frac = |k: u64| k as f64 / m as f64;
    Ok(DeviationEstimate {
        alpha: a,
        lambda,
        rate_upper: frac(up),
        rate_lower: frac(down),
        rate_two_sided: frac(either),
        ci_upper: wilson_interval(up, m, CONFIDENCE),
        ci_lower: wilson_interval(down, m, CONFIDENCE),
        ci_two_sided: wilson_interval(either, m, CONFIDENCE),
        trees_used: m,
    })
}

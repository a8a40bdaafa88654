//! Small statistical helpers: Wilson score intervals and a pooled
//! chi-square goodness-of-fit test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Two-sided standard normal quantile for `confidence` (e.g. 0.99 -> 2.5758).
pub fn normal_quantile(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + confidence / 2.0)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Interval {
    if trials == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let z = normal_quantile(confidence);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        lo: (center - half).max(0.0),
        hi: (center + half).min(1.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Number of pooled bins.
    pub bins: usize,
}

/// Pearson chi-square test of `observed` counts against `expected`
/// probabilities. Adjacent positions are pooled until every bin expects at
/// least `min_expected` observations; a leftover tail is merged into the last
/// full bin. Observations outside the support of `expected` give an infinite
/// statistic.
pub fn chi_square_gof(
    observed: &BTreeMap<i64, u64>,
    expected: &BTreeMap<i64, f64>,
    min_expected: f64,
) -> GoodnessOfFit {
    let total: u64 = observed.values().sum();
    let n = total as f64;
    if observed.keys().any(|x| !expected.contains_key(x)) {
        return GoodnessOfFit {
            statistic: f64::INFINITY,
            degrees_of_freedom: 0,
            p_value: 0.0,
            bins: 0,
        };
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (x, p) in expected {
        obs += observed.get(x).copied().unwrap_or(0) as f64;
        exp += p * n;
        if exp >= min_expected {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => bins.push((obs, exp)),
        }
    }
    let statistic: f64 = bins
        .iter()
        .filter(|b| b.1 > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).unwrap().cdf(statistic)
    };
    GoodnessOfFit {
        statistic,
        degrees_of_freedom: dof,
        p_value,
        bins: bins.len(),
    }
}

//! Exact law of a spine `(x_1, .., x_n)` picked uniformly from the
//! generation-`n` population of an infinite forest.
//!
//! The expected number of generation-`n` particles whose displacement path is
//! `(x_1, .., x_n)` is proportional to
//!
//! ```text
//! p_1(x_1 | 0) · m_2(u_1) p_2(x_2 | u_1) · … · m_n(u_{n-1}) p_n(x_n | u_{n-1})
//! ```
//!
//! with `u_i = x_1 + … + x_i` and `m_i(u)` the mean offspring count of
//! generation `i`'s law at parent position `u`. (The root's own branching
//! factor is a common constant and cancels.) Normalizing gives the spine
//! law. When every `m_i` is constant in `u` the `m` factors cancel as well and
//! the spine law collapses to the chain law `Π p_i(x_i | u_{i-1})` of a plain
//! random walk; [`reduction_distance`] measures how far a spec is from that.

use std::collections::BTreeMap;

use super::pmf::{add_to, FinitePmf};
use super::OracleError;
use crate::model::ValidatedSpec;
use crate::prob::Weight;

/// Default cap on enumerated spines / states.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SpineLaw<W> {
    spines: BTreeMap<Vec<i64>, W>,
    normalizer: W,
}

impl<W: Weight> SpineLaw<W> {
    /// Spines with non-zero probability.
    pub fn spines(&self) -> &BTreeMap<Vec<i64>, W> {
        &self.spines
    }

    /// Sum of unnormalized spine weights.
    pub fn normalizer(&self) -> &W {
        &self.normalizer
    }

    pub fn probability(&self, spine: &[i64]) -> W {
        self.spines.get(spine).cloned().unwrap_or_else(W::zero)
    }

    pub fn total(&self) -> W {
        self.spines.values().fold(W::zero(), |a, w| a + w.clone())
    }
}

struct Enumerated<W> {
    spine: Vec<i64>,
    brw: W,
    chain: W,
}

/// Upper bound on the number of spines: product over generations of the
/// largest support size among that generation's displacement laws.
pub fn spine_count_bound(spec: &ValidatedSpec) -> u128 {
    spec.generations()
        .iter()
        .map(|g| g.displacement.laws().map(|l| l.atoms().len()).max().unwrap_or(0) as u128)
        .fold(1u128, |a, b| a.saturating_mul(b))
}

fn enumerate<W: Weight>(spec: &ValidatedSpec, budget: u64) -> Result<Vec<Enumerated<W>>, OracleError> {
    let required = spine_count_bound(spec);
    if required > budget as u128 {
        return Err(OracleError::BudgetExceeded { required, budget });
    }
    let mut level = vec![Enumerated {
        spine: Vec::new(),
        brw: W::one(),
        chain: W::one(),
    }];
    for (i, g) in spec.generations().iter().enumerate() {
        let mut next = Vec::with_capacity(level.len() * 2);
        for e in level {
            let u: i64 = e.spine.iter().sum();
            let m = if i == 0 {
                W::one()
            } else {
                W::from_prob(&g.offspring.at(u).mean())?
            };
            for (x, p) in g.displacement.at(u).weights::<W>()? {
                let mut spine = e.spine.clone();
                spine.push(x);
                next.push(Enumerated {
                    spine,
                    brw: e.brw.clone() * m.clone() * p.clone(),
                    chain: e.chain.clone() * p,
                });
            }
        }
        level = next;
    }
    Ok(level)
}

/// Normalized spine law with the default budget.
pub fn spine_law<W: Weight>(spec: &ValidatedSpec) -> Result<SpineLaw<W>, OracleError> {
    spine_law_with_budget(spec, DEFAULT_BUDGET)
}

pub fn spine_law_with_budget<W: Weight>(
    spec: &ValidatedSpec,
    budget: u64,
) -> Result<SpineLaw<W>, OracleError> {
    let all = enumerate::<W>(spec, budget)?;
    normalize(all.into_iter().map(|e| (e.spine, e.brw)))
}

fn normalize<W: Weight>(
    weights: impl Iterator<Item = (Vec<i64>, W)>,
) -> Result<SpineLaw<W>, OracleError> {
    let weights: Vec<(Vec<i64>, W)> = weights.filter(|(_, w)| !w.is_zero()).collect();
    let normalizer = weights.iter().fold(W::zero(), |a, (_, w)| a + w.clone());
    if normalizer.is_zero() {
        return Err(OracleError::ZeroPopulation);
    }
    let mut spines = BTreeMap::new();
    for (s, w) in weights {
        add_to(&mut spines, s, w / normalizer.clone());
    }
    Ok(SpineLaw { spines, normalizer })
}

/// Law of the endpoint `x_1 + … + x_n` under a spine law.
pub fn spine_marginal_position<W: Weight>(law: &SpineLaw<W>) -> FinitePmf<W> {
    FinitePmf::from_atoms(
        law.spines
            .iter()
            .map(|(s, w)| (s.iter().sum::<i64>(), w.clone())),
    )
}

/// Total variation distance between the spine law and the chain law
/// `Π p_i(x_i | u_{i-1})`. Zero whenever branching is position independent.
pub fn reduction_distance<W: Weight>(spec: &ValidatedSpec) -> Result<W, OracleError> {
    reduction_distance_with_budget(spec, DEFAULT_BUDGET)
}

pub fn reduction_distance_with_budget<W: Weight>(
    spec: &ValidatedSpec,
    budget: u64,
) -> Result<W, OracleError> {
    let all = enumerate::<W>(spec, budget)?;
    let chain = all.iter().fold(W::zero(), |a, e| a + e.chain.clone());
    let brw = normalize(all.iter().map(|e| (e.spine.clone(), e.brw.clone())))?;
    let mut sum = W::zero();
    for e in &all {
        let p = brw.probability(&e.spine);
        let q = e.chain.clone() / chain.clone();
        sum = sum + (p - q).abs();
    }
    Ok(sum / W::from_i64(2))
}

//! Exhaustive enumeration of small forests.
//!
//! The enumerator tracks the exact law of the generation-`i` population as a
//! multiset of positions. A particle at `u` with `k` children contributes the
//! multiset `{u + x_j with multiplicity c_j}` with probability
//! `P(K = k) · k! / Π c_j! · Π p(x_j)^{c_j}`, which aggregates all ordered
//! displacement assignments that produce the same multiset. Since the process
//! is Markov in the position multiset this is the same law as enumerating
//! every tree shape and every displacement assignment one by one.
//!
//! From the final law we get the expected exceedance fraction of a tree
//! conditioned on survival (`Z >= 1`), which for position-independent
//! branching must equal the random-walk tail `P(S_n >= na + λ)`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use super::pmf::{add_to, exact_tail};
use super::{exact_rw_distribution, OracleError, DEFAULT_BUDGET};
use crate::model::ValidatedSpec;
use crate::prob::Weight;

/// Canonical multiset: sorted `(position, count)` pairs.
type Multiset = Vec<(i64, u64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct TinyForest<W> {
    /// `E[ p_τ(λ) | Z >= 1 ]`.
    pub expected_exceedance: W,
    /// `P(S_n >= na + λ)` under the random walk `(p_i)`.
    pub tail: W,
    pub survival_probability: W,
    /// `na + λ`.
    pub threshold: W,
    /// Distinct population multisets at generation `n`, extinct one included.
    pub states: u64,
}

impl<W: Weight> TinyForest<W> {
    pub fn difference(&self) -> W {
        self.expected_exceedance.clone() - self.tail.clone()
    }
}

fn merge(a: &Multiset, b: &Multiset) -> Multiset {
    let mut m: BTreeMap<i64, u64> = a.iter().copied().collect();
    for &(x, c) in b {
        *m.entry(x).or_insert(0) += c;
    }
    m.into_iter().collect()
}

fn multinomial_coefficient(parts: &[u64]) -> i64 {
    let mut acc: u128 = 1;
    let mut n: u128 = 0;
    for &c in parts {
        for j in 1..=c as u128 {
            n += 1;
            acc = acc * n / j;
        }
    }
    i64::try_from(acc).expect("multinomial coefficient fits in i64")
}

/// Every composition of `k` into `slots` non-negative parts.
fn compositions(k: u64, slots: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if slots == 1 {
        prefix.push(k);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for c in 0..=k {
        prefix.push(c);
        compositions(k - c, slots - 1, prefix, out);
        prefix.pop();
    }
}

/// Law of the children multiset of one particle at `u` in generation `g`.
fn children_law<W: Weight>(
    spec: &ValidatedSpec,
    g: usize,
    u: i64,
) -> Result<Vec<(Multiset, W)>, OracleError> {
    let gen = &spec.generations()[g];
    let offspring = gen.offspring.at(u).finite_pmf::<W>()?;
    let steps = gen.displacement.at(u).weights::<W>()?;
    let mut out: BTreeMap<Multiset, W> = BTreeMap::new();
    for (k, pk) in offspring {
        if pk.is_zero() {
            continue;
        }
        if k == 0 {
            add_to(&mut out, Vec::new(), pk);
            continue;
        }
        let mut comps = Vec::new();
        compositions(k as u64, steps.len(), &mut Vec::new(), &mut comps);
        for c in comps {
            let mut w = pk.clone() * W::from_i64(multinomial_coefficient(&c));
            let mut ms = Vec::new();
            for (j, &cj) in c.iter().enumerate() {
                for _ in 0..cj {
                    w = w * steps[j].1.clone();
                }
                if cj > 0 {
                    ms.push((u + steps[j].0, cj));
                }
            }
            ms.sort();
            add_to(&mut out, ms, w);
        }
    }
    Ok(out.into_iter().collect())
}

/// Exact population law of generation `n`, keyed by position multiset.
pub fn population_law<W: Weight>(
    spec: &ValidatedSpec,
    budget: u64,
) -> Result<BTreeMap<Multiset, W>, OracleError> {
    let mut work: u64 = 0;
    let mut states: BTreeMap<Multiset, W> = BTreeMap::from([(vec![(0, 1)], W::one())]);
    for g in 0..spec.n() {
        let mut cache: BTreeMap<i64, Vec<(Multiset, W)>> = BTreeMap::new();
        let mut next: BTreeMap<Multiset, W> = BTreeMap::new();
        for (state, w) in states {
            if state.is_empty() {
                add_to(&mut next, state, w);
                continue;
            }
            let mut combined: BTreeMap<Multiset, W> = BTreeMap::from([(Vec::new(), W::one())]);
            for &(u, count) in &state {
                let law = &*match cache.entry(u) {
                    Entry::Occupied(e) => e.into_mut(),
                    Entry::Vacant(e) => e.insert(children_law::<W>(spec, g, u)?),
                };
                for _ in 0..count {
                    let mut merged = BTreeMap::new();
                    for (ms, cw) in &combined {
                        for (child, pw) in law {
                            work += 1 + (ms.len() + child.len()) as u64;
                            if work > budget {
                                return Err(OracleError::BudgetExceeded {
                                    required: work as u128,
                                    budget,
                                });
                            }
                            add_to(&mut merged, merge(ms, child), cw.clone() * pw.clone());
                        }
                    }
                    combined = merged;
                }
            }
            for (ms, cw) in combined {
                add_to(&mut next, ms, w.clone() * cw);
            }
        }
        states = next;
    }
    Ok(states)
}

/// Expected exceedance fraction over surviving trees versus the random-walk
/// tail, both exact, with the default budget.
pub fn enumerate_tiny_forest<W: Weight>(
    spec: &ValidatedSpec,
    lambda: &W,
) -> Result<TinyForest<W>, OracleError> {
    enumerate_tiny_forest_with_budget(spec, lambda, DEFAULT_BUDGET)
}

pub fn enumerate_tiny_forest_with_budget<W: Weight>(
    spec: &ValidatedSpec,
    lambda: &W,
    budget: u64,
) -> Result<TinyForest<W>, OracleError> {
    let na = spec.mean_position_as::<W>()?;
    let threshold = na + lambda.clone();
    let tail = exact_tail(&exact_rw_distribution::<W>(spec)?, &threshold);

    let law = population_law::<W>(spec, budget)?;
    let states = law.len() as u64;
    let mut survive = W::zero();
    let mut weighted = W::zero();
    for (ms, w) in law {
        let z: u64 = ms.iter().map(|e| e.1).sum();
        if z == 0 {
            continue;
        }
        let above: u64 = ms
            .iter()
            .filter(|(x, _)| W::from_i64(*x) >= threshold)
            .map(|e| e.1)
            .sum();
        let frac = W::from_i64(above as i64) / W::from_i64(z as i64);
        weighted = weighted + w.clone() * frac;
        survive = survive + w;
    }
    if survive.is_zero() {
        return Err(OracleError::NoSurvival);
    }
    Ok(TinyForest {
        expected_exceedance: weighted / survive.clone(),
        tail,
        survival_probability: survive,
        threshold,
        states,
    })
}

use std::collections::BTreeMap;

use crate::model::DisplacementLaw;
use crate::prob::{NotExact, Weight};

/// Probability mass function on the integer lattice with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePmf<W> {
    atoms: BTreeMap<i64, W>,
}

impl<W: Weight> FinitePmf<W> {
    pub fn point(x: i64) -> Self {
        FinitePmf {
            atoms: BTreeMap::from([(x, W::one())]),
        }
    }

    /// Sums repeated positions.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (i64, W)>) -> Self {
        let mut map: BTreeMap<i64, W> = BTreeMap::new();
        for (x, w) in atoms {
            add_to(&mut map, x, w);
        }
        FinitePmf { atoms: map }
    }

    pub fn from_law(law: &DisplacementLaw) -> Result<Self, NotExact> {
        Ok(Self::from_atoms(law.weights::<W>()?))
    }

    pub fn atoms(&self) -> &BTreeMap<i64, W> {
        &self.atoms
    }

    pub fn get(&self, x: i64) -> W {
        self.atoms.get(&x).cloned().unwrap_or_else(W::zero)
    }

    pub fn min(&self) -> Option<i64> {
        self.atoms.keys().next().copied()
    }

    pub fn max(&self) -> Option<i64> {
        self.atoms.keys().next_back().copied()
    }

    pub fn total(&self) -> W {
        self.atoms.values().fold(W::zero(), |a, w| a + w.clone())
    }

    /// Total mass is one (exactly, or within 1e-12 for floats) and no atom
    /// is negative.
    pub fn is_normalized(&self) -> bool {
        self.atoms.values().all(|w| *w >= W::zero()) && self.total().approx_eq(&W::one())
    }

    /// Law of the sum of independent draws from `self` and `other`.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut out = BTreeMap::new();
        for (x, p) in &self.atoms {
            for (y, q) in &other.atoms {
                add_to(&mut out, x + y, p.clone() * q.clone());
            }
        }
        FinitePmf { atoms: out }
    }

    pub fn mean(&self) -> W {
        self.atoms
            .iter()
            .fold(W::zero(), |a, (x, p)| a + W::from_i64(*x) * p.clone())
    }

    /// `P(X >= threshold)`.
    pub fn tail_ge(&self, threshold: &W) -> W {
        self.atoms
            .iter()
            .filter(|(x, _)| W::from_i64(**x) >= *threshold)
            .fold(W::zero(), |a, (_, p)| a + p.clone())
    }

    /// `P(X <= threshold)`.
    pub fn tail_le(&self, threshold: &W) -> W {
        self.atoms
            .iter()
            .filter(|(x, _)| W::from_i64(**x) <= *threshold)
            .fold(W::zero(), |a, (_, p)| a + p.clone())
    }

    /// Half the L1 distance.
    pub fn tv_distance(&self, other: &Self) -> W {
        let keys: std::collections::BTreeSet<i64> =
            self.atoms.keys().chain(other.atoms.keys()).copied().collect();
        let sum = keys
            .into_iter()
            .fold(W::zero(), |a, x| a + (self.get(x) - other.get(x)).abs());
        sum / W::from_i64(2)
    }

    /// Smallest support point with `P(X <= t) >= a`, evaluated in `f64`.
    pub fn quantile(&self, a: f64) -> Option<i64> {
        let mut cum = 0.0;
        for (x, p) in &self.atoms {
            cum += p.to_f64();
            if cum >= a {
                return Some(*x);
            }
        }
        self.max()
    }

    pub fn to_f64(&self) -> FinitePmf<f64> {
        FinitePmf {
            atoms: self.atoms.iter().map(|(x, p)| (*x, p.to_f64())).collect(),
        }
    }
}

pub(crate) fn add_to<K: Ord, W: Weight>(map: &mut BTreeMap<K, W>, key: K, w: W) {
    match map.get_mut(&key) {
        Some(v) => *v = v.clone() + w,
        None => {
            map.insert(key, w);
        }
    }
}

/// `P(X >= threshold)` for `X ~ pmf`.
pub fn exact_tail<W: Weight>(pmf: &FinitePmf<W>, threshold: &W) -> W {
    pmf.tail_ge(threshold)
}

//! Monte Carlo realization of BRW trees and forests.
//!
//! A generation is stored as a histogram `position -> count`, never as a list
//! of particles. All particles sharing a position are processed together: the
//! total number of their children is drawn in one shot (sum of i.i.d. counts)
//! and those children are scattered over the displacement support with a
//! multinomial draw. This is equal in law to per-particle sampling with
//! independent sibling displacements, and keeps the cost proportional to the
//! number of occupied positions rather than to the population.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{DisplacementLaw, OffspringKind, OffspringLaw, PositionalLaw, ValidatedSpec};
use crate::rng::{split_seed, tree_rng};

/// Default maximum population of any generation of a single tree.
pub const DEFAULT_CAP: u64 = 10_000_000;

/// Multiset of generation-`n` leaf positions of one tree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LeafHistogram {
    counts: BTreeMap<i64, u64>,
    total: u64,
}

impl LeafHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a histogram from `(position, count)` pairs; repeated positions
    /// are summed and zero counts dropped.
    pub fn from_counts(pairs: impl IntoIterator<Item = (i64, u64)>) -> Self {
        let mut h = Self::new();
        for (x, c) in pairs {
            h.add(x, c);
        }
        h
    }

    pub fn from_positions(positions: impl IntoIterator<Item = i64>) -> Self {
        Self::from_counts(positions.into_iter().map(|x| (x, 1)))
    }

    pub fn add(&mut self, position: i64, count: u64) {
        if count > 0 {
            *self.counts.entry(position).or_insert(0) += count;
            self.total += count;
        }
    }

    pub fn counts(&self) -> &BTreeMap<i64, u64> {
        &self.counts
    }

    /// Population `Z`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn min_position(&self) -> Option<i64> {
        self.counts.keys().next().copied()
    }

    pub fn max_position(&self) -> Option<i64> {
        self.counts.keys().next_back().copied()
    }

    /// `"pos:count;pos:count"`.
    pub fn to_sparse_string(&self) -> String {
        self.counts
            .iter()
            .map(|(x, c)| format!("{x}:{c}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// One simulated tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeRun {
    pub tree_index: u64,
    pub seed: u64,
    /// Population of generations `0..=n`; trailing zeros after extinction.
    pub sizes: Vec<u64>,
    /// Generation-`n` leaves, `None` when the tree went extinct.
    pub leaves: Option<LeafHistogram>,
}

impl TreeRun {
    pub fn is_extinct(&self) -> bool {
        self.leaves.is_none()
    }

    pub fn final_size(&self) -> u64 {
        self.sizes.last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeOverflow {
    pub tree_index: u64,
    pub seed: u64,
    pub generation: usize,
    pub population: u64,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("population {population} exceeds cap {cap} at generation {generation}")]
    Overflow {
        generation: usize,
        population: u64,
        cap: u64,
    },
    #[error("cap must be at least 1")]
    ZeroCap,
    #[error("a forest needs at least one tree")]
    NoTrees,
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// A finite forest of independent trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestSample {
    pub surviving: Vec<TreeRun>,
    pub extinct: Vec<TreeRun>,
    pub overflowed: Vec<TreeOverflow>,
    pub requested: u64,
    pub master_seed: u64,
}

impl ForestSample {
    pub fn extinct_count(&self) -> u64 {
        self.extinct.len() as u64
    }

    /// Extinct trees over trees that ran to completion.
    pub fn extinction_fraction(&self) -> f64 {
        let done = self.surviving.len() + self.extinct.len();
        if done == 0 {
            0.0
        } else {
            self.extinct.len() as f64 / done as f64
        }
    }

    /// Every completed tree ordered by index.
    pub fn completed(&self) -> Vec<&TreeRun> {
        let mut all: Vec<&TreeRun> = self.surviving.iter().chain(&self.extinct).collect();
        all.sort_by_key(|t| t.tree_index);
        all
    }
}

enum OffspringSampler {
    Fixed(u64),
    Split(f64),
    Poisson(f64),
    Table(Vec<u64>, Vec<f64>),
}

impl OffspringSampler {
    fn new(law: &OffspringLaw) -> Self {
        match law.kind() {
            OffspringKind::Deterministic(k) => OffspringSampler::Fixed(*k as u64),
            OffspringKind::BernoulliSplit(p) => OffspringSampler::Split(p.to_f64()),
            OffspringKind::Poisson(m) => OffspringSampler::Poisson(m.to_f64()),
            OffspringKind::Table(entries) => OffspringSampler::Table(
                entries.iter().map(|e| e.0 as u64).collect(),
                entries.iter().map(|e| e.1.to_f64()).collect(),
            ),
        }
    }

    /// Total offspring of `parents` independent particles.
    fn total<R: Rng>(&self, parents: u64, rng: &mut R) -> u64 {
        match self {
            OffspringSampler::Fixed(k) => parents.saturating_mul(*k),
            OffspringSampler::Split(p) => 2 * binomial(parents, *p, rng),
            OffspringSampler::Poisson(m) => {
                let mean = *m * parents as f64;
                if mean <= 0.0 {
                    0
                } else {
                    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
                }
            }
            OffspringSampler::Table(counts, probs) => {
                let mut total = 0u64;
                multinomial(parents, probs, rng, |j, n| {
                    total = total.saturating_add(n.saturating_mul(counts[j]))
                });
                total
            }
        }
    }
}

struct DisplacementSampler {
    offsets: Vec<i64>,
    probs: Vec<f64>,
}

impl DisplacementSampler {
    fn new(law: &DisplacementLaw) -> Self {
        DisplacementSampler {
            offsets: law.atoms().iter().map(|a| a.0).collect(),
            probs: law.atoms().iter().map(|a| a.1.to_f64()).collect(),
        }
    }
}

fn binomial<R: Rng>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
    }
}

/// Multinomial draw by sequential conditional binomials; calls `emit(j, n_j)`
/// for every category with a non-zero count.
fn multinomial<R: Rng>(n: u64, probs: &[f64], rng: &mut R, mut emit: impl FnMut(usize, u64)) {
    let mut left = n;
    let mut mass = 1.0f64;
    let last = probs.len() - 1;
    for (j, &p) in probs.iter().enumerate() {
        if left == 0 {
            return;
        }
        let c = if j == last {
            left
        } else {
            let q = if mass <= 0.0 { 1.0 } else { (p / mass).clamp(0.0, 1.0) };
            binomial(left, q, rng)
        };
        if c > 0 {
            emit(j, c);
        }
        left -= c;
        mass -= p;
    }
}

struct CompiledGeneration {
    offspring: PositionalLaw<OffspringSampler>,
    displacement: PositionalLaw<DisplacementSampler>,
}

/// Samplers for every law of a spec, built once per forest.
pub struct CompiledSpec {
    generations: Vec<CompiledGeneration>,
}

impl CompiledSpec {
    pub fn new(spec: &ValidatedSpec) -> Self {
        CompiledSpec {
            generations: spec
                .generations()
                .iter()
                .map(|g| CompiledGeneration {
                    offspring: g.offspring.map(OffspringSampler::new),
                    displacement: g.displacement.map(DisplacementSampler::new),
                })
                .collect(),
        }
    }

    pub fn run_tree(&self, tree_index: u64, seed: u64, cap: u64) -> Result<TreeRun, SimError> {
        if cap == 0 {
            return Err(SimError::ZeroCap);
        }
        let mut rng = tree_rng(seed);
        let n = self.generations.len();
        let mut sizes = Vec::with_capacity(n + 1);
        sizes.push(1u64);
        let mut current = LeafHistogram::from_counts([(0, 1)]);
        for (i, g) in self.generations.iter().enumerate() {
            let mut next = LeafHistogram::new();
            for (&u, &parents) in current.counts() {
                let children = g.offspring.at(u).total(parents, &mut rng);
                if children == 0 {
                    continue;
                }
                let disp = g.displacement.at(u);
                multinomial(children, &disp.probs, &mut rng, |j, c| {
                    next.add(u + disp.offsets[j], c)
                });
            }
            if next.total() > cap {
                return Err(SimError::Overflow {
                    generation: i + 1,
                    population: next.total(),
                    cap,
                });
            }
            sizes.push(next.total());
            if next.is_empty() {
                sizes.resize(n + 1, 0);
                return Ok(TreeRun {
                    tree_index,
                    seed,
                    sizes,
                    leaves: None,
                });
            }
            current = next;
        }
        Ok(TreeRun {
            tree_index,
            seed,
            sizes,
            leaves: Some(current),
        })
    }
}

/// Grows one tree from a single ancestor at the origin.
pub fn simulate_tree(spec: &ValidatedSpec, seed: u64, cap: u64) -> Result<TreeRun, SimError> {
    CompiledSpec::new(spec).run_tree(0, seed, cap)
}

/// Grows `trees` independent trees on the global rayon pool. Tree `i` uses
/// seed [`split_seed`]`(master_seed, i)`.
pub fn simulate_forest(
    spec: &ValidatedSpec,
    trees: u64,
    master_seed: u64,
    cap: u64,
) -> Result<ForestSample, SimError> {
    simulate_forest_with_workers(spec, trees, master_seed, cap, 0)
}

/// Like [`simulate_forest`] on a dedicated pool of `workers` threads
/// (`0` = global pool). The result does not depend on `workers`.
pub fn simulate_forest_with_workers(
    spec: &ValidatedSpec,
    trees: u64,
    master_seed: u64,
    cap: u64,
    workers: usize,
) -> Result<ForestSample, SimError> {
    if trees == 0 {
        return Err(SimError::NoTrees);
    }
    if cap == 0 {
        return Err(SimError::ZeroCap);
    }
    let compiled = CompiledSpec::new(spec);
    let run = || -> Vec<Result<TreeRun, TreeOverflow>> {
        (0..trees)
            .into_par_iter()
            .map(|i| {
                let seed = split_seed(master_seed, i);
                compiled.run_tree(i, seed, cap).map_err(|e| match e {
                    SimError::Overflow {
                        generation,
                        population,
                        ..
                    } => TreeOverflow {
                        tree_index: i,
                        seed,
                        generation,
                        population,
                    },
                    other => unreachable!("{other}"),
                })
            })
            .collect()
    };
    let results = if workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?
            .install(run)
    };

    let mut sample = ForestSample {
        surviving: Vec::new(),
        extinct: Vec::new(),
        overflowed: Vec::new(),
        requested: trees,
        master_seed,
    };
    for r in results {
        match r {
            Ok(t) if t.is_extinct() => sample.extinct.push(t),
            Ok(t) => sample.surviving.push(t),
            Err(o) => sample.overflowed.push(o),
        }
    }
    Ok(sample)
}

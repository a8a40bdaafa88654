//! The BRW model: a sequence of per-generation pairs of an offspring law and a
//! displacement law, either of which may depend on the parent's position.
//!
//! Generation `i` (1-based) describes how a particle of generation `i - 1`
//! at position `u` produces generation `i`: the number of children follows
//! `offspring.at(u)` and every child is displaced from `u` by an independent
//! draw from `displacement.at(u)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::rational::BigRational;
use num::One;
use thiserror::Error;

use crate::prob::{NotExact, Prob, Weight};

/// Integer-lattice displacement law with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementLaw {
    atoms: Vec<(i64, Prob)>,
}

impl DisplacementLaw {
    pub fn new(atoms: Vec<(i64, Prob)>) -> Self {
        DisplacementLaw { atoms }
    }

    /// `+1` or `-1` with probability one half each.
    pub fn fair_step() -> Self {
        Self::new(vec![(-1, Prob::ratio(1, 2)), (1, Prob::ratio(1, 2))])
    }

    /// `+1` with probability `up`, `-1` otherwise.
    pub fn biased_step(up: Prob) -> Self {
        let down = Prob::combine([&up], |v| BigRational::one() - &v[0], |v| 1.0 - v[0]);
        Self::new(vec![(-1, down), (1, up)])
    }

    pub fn point(offset: i64) -> Self {
        Self::new(vec![(offset, Prob::one())])
    }

    pub fn atoms(&self) -> &[(i64, Prob)] {
        &self.atoms
    }

    pub fn min_offset(&self) -> i64 {
        self.atoms.iter().map(|a| a.0).min().unwrap_or(0)
    }

    pub fn max_offset(&self) -> i64 {
        self.atoms.iter().map(|a| a.0).max().unwrap_or(0)
    }

    /// Width `b - a` of the support `[a, b]`.
    pub fn width(&self) -> u64 {
        (self.max_offset() - self.min_offset()) as u64
    }

    pub fn is_exact(&self) -> bool {
        self.atoms.iter().all(|a| a.1.is_exact())
    }

    pub fn weights<W: Weight>(&self) -> Result<Vec<(i64, W)>, NotExact> {
        self.atoms
            .iter()
            .map(|(x, p)| W::from_prob(p).map(|w| (*x, w)))
            .collect()
    }

    pub fn mean<W: Weight>(&self) -> Result<W, NotExact> {
        let mut acc = W::zero();
        for (x, p) in self.weights::<W>()? {
            acc = acc + W::from_i64(x) * p;
        }
        Ok(acc)
    }

    fn check(&self, loc: Location, out: &mut Vec<SpecViolation>) {
        if self.atoms.is_empty() {
            out.push(SpecViolation::EmptySupport { loc });
            return;
        }
        let mut seen = BTreeSet::new();
        for (x, p) in &self.atoms {
            if !seen.insert(*x) {
                out.push(SpecViolation::DuplicateOffset { loc, offset: *x });
            }
            if !p.is_finite() || !p.is_unit() {
                out.push(SpecViolation::ProbabilityOutOfRange {
                    loc,
                    value: p.to_string(),
                });
            }
        }
        check_normalized(self.atoms.iter().map(|a| &a.1), loc, out);
    }

    /// Sorts atoms by offset and drops zero-mass atoms.
    fn normalize(&mut self) {
        self.atoms.retain(|a| !a.1.is_zero());
        self.atoms.sort_by_key(|a| a.0);
    }
}

/// Parametric offspring-count distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum OffspringKind {
    /// Exactly `k` children.
    Deterministic(u32),
    /// Two children with probability `p`, none otherwise.
    BernoulliSplit(Prob),
    /// Poisson with the given mean.
    Poisson(Prob),
    /// Explicit `count -> probability` table.
    Table(Vec<(u32, Prob)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    kind: OffspringKind,
    declared_mean: Option<Prob>,
}

/// Failure to express an offspring law in a given arithmetic.
#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
pub enum LawError {
    #[error("offspring law has unbounded support")]
    UnboundedSupport,
    #[error("poisson generating function is not rational")]
    NoRationalForm,
    #[error(transparent)]
    NotExact(#[from] NotExact),
}

impl OffspringLaw {
    pub fn new(kind: OffspringKind) -> Self {
        OffspringLaw {
            kind,
            declared_mean: None,
        }
    }

    /// Attaches a declared mean, checked against the analytic mean during
    /// validation.
    pub fn with_declared_mean(mut self, mean: Prob) -> Self {
        self.declared_mean = Some(mean);
        self
    }

    pub fn deterministic(k: u32) -> Self {
        Self::new(OffspringKind::Deterministic(k))
    }

    pub fn bernoulli_split(p: Prob) -> Self {
        Self::new(OffspringKind::BernoulliSplit(p))
    }

    pub fn poisson(mean: Prob) -> Self {
        Self::new(OffspringKind::Poisson(mean))
    }

    pub fn table(entries: Vec<(u32, Prob)>) -> Self {
        Self::new(OffspringKind::Table(entries))
    }

    pub fn kind(&self) -> &OffspringKind {
        &self.kind
    }

    pub fn declared_mean(&self) -> Option<&Prob> {
        self.declared_mean.as_ref()
    }

    /// The mean implied by the parameters (the branching factor).
    pub fn mean(&self) -> Prob {
        match &self.kind {
            OffspringKind::Deterministic(k) => Prob::integer(*k as i64),
            OffspringKind::BernoulliSplit(p) => {
                Prob::combine([p], |v| &v[0] * BigRational::from_integer(2.into()), |v| 2.0 * v[0])
            }
            OffspringKind::Poisson(m) => m.clone(),
            OffspringKind::Table(entries) => {
                let counts: Vec<i64> = entries.iter().map(|e| e.0 as i64).collect();
                let c2 = counts.clone();
                Prob::combine(
                    entries.iter().map(|e| &e.1),
                    move |v| {
                        v.iter()
                            .zip(&counts)
                            .map(|(p, &k)| p * BigRational::from_integer(k.into()))
                            .sum()
                    },
                    move |v| v.iter().zip(&c2).map(|(p, &k)| p * k as f64).sum(),
                )
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        match &self.kind {
            OffspringKind::Deterministic(_) => true,
            OffspringKind::BernoulliSplit(p) | OffspringKind::Poisson(p) => p.is_exact(),
            OffspringKind::Table(entries) => entries.iter().all(|e| e.1.is_exact()),
        }
    }

    /// Finite `count -> probability` list, ascending by count.
    pub fn finite_pmf<W: Weight>(&self) -> Result<Vec<(u32, W)>, LawError> {
        match &self.kind {
            OffspringKind::Deterministic(k) => Ok(vec![(*k, W::one())]),
            OffspringKind::BernoulliSplit(p) => {
                let p = W::from_prob(p)?;
                Ok(vec![(0, W::one() - p.clone()), (2, p)])
            }
            OffspringKind::Poisson(_) => Err(LawError::UnboundedSupport),
            OffspringKind::Table(entries) => {
                let mut v = entries
                    .iter()
                    .map(|(k, p)| W::from_prob(p).map(|w| (*k, w)))
                    .collect::<Result<Vec<_>, _>>()?;
                v.sort_by_key(|e| e.0);
                Ok(v)
            }
        }
    }

    /// Probability generating function `f(s) = E[s^K]`.
    pub fn pgf<W: Weight>(&self, s: &W) -> Result<W, LawError> {
        if let OffspringKind::Poisson(m) = &self.kind {
            let m = W::from_prob(m)?;
            return (m * (s.clone() - W::one())).exp().ok_or(LawError::NoRationalForm);
        }
        let mut acc = W::zero();
        for (k, p) in self.finite_pmf::<W>()? {
            let mut pow = W::one();
            for _ in 0..k {
                pow = pow * s.clone();
            }
            acc = acc + p * pow;
        }
        Ok(acc)
    }

    fn check(&self, loc: Location, out: &mut Vec<SpecViolation>) {
        let before = out.len();
        match &self.kind {
            OffspringKind::Deterministic(_) => {}
            OffspringKind::BernoulliSplit(p) => {
                if !p.is_finite() || !p.is_unit() {
                    out.push(SpecViolation::InvalidParameter {
                        loc,
                        detail: format!("bernoulli-split probability {p} outside [0, 1]"),
                    });
                }
            }
            OffspringKind::Poisson(m) => {
                if !m.is_finite() || m.is_negative() {
                    out.push(SpecViolation::InvalidParameter {
                        loc,
                        detail: format!("poisson mean {m} must be finite and non-negative"),
                    });
                }
            }
            OffspringKind::Table(entries) => {
                if entries.is_empty() {
                    out.push(SpecViolation::InvalidParameter {
                        loc,
                        detail: "finite-table offspring law is empty".into(),
                    });
                } else {
                    let mut seen = BTreeSet::new();
                    for (k, p) in entries {
                        if !seen.insert(*k) {
                            out.push(SpecViolation::InvalidParameter {
                                loc,
                                detail: format!("offspring count {k} listed twice"),
                            });
                        }
                        if !p.is_finite() || !p.is_unit() {
                            out.push(SpecViolation::ProbabilityOutOfRange {
                                loc,
                                value: p.to_string(),
                            });
                        }
                    }
                    check_normalized(entries.iter().map(|e| &e.1), loc, out);
                }
            }
        }
        if out.len() == before {
            if let Some(declared) = &self.declared_mean {
                let analytic = self.mean();
                if !declared.close_to(&analytic) {
                    out.push(SpecViolation::MeanMismatch {
                        loc,
                        declared: declared.to_string(),
                        analytic: analytic.to_string(),
                    });
                }
            }
        }
    }
}

fn check_normalized<'a>(
    probs: impl Iterator<Item = &'a Prob>,
    loc: Location,
    out: &mut Vec<SpecViolation>,
) {
    let probs: Vec<&Prob> = probs.collect();
    let sum = Prob::combine(probs, |v| v.into_iter().sum(), |v| v.iter().sum());
    if !sum.close_to(&Prob::one()) {
        out.push(SpecViolation::PmfNotNormalized {
            loc,
            sum: sum.to_string(),
        });
    }
}

/// A law that is either uniform in the parent position or given by an
/// explicit finite map with a default for unmapped positions.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionalLaw<T> {
    default: T,
    overrides: BTreeMap<i64, T>,
}

impl<T> PositionalLaw<T> {
    pub fn uniform(law: T) -> Self {
        PositionalLaw {
            default: law,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_override(mut self, position: i64, law: T) -> Self {
        self.overrides.insert(position, law);
        self
    }

    pub fn at(&self, position: i64) -> &T {
        self.overrides.get(&position).unwrap_or(&self.default)
    }

    pub fn default_law(&self) -> &T {
        &self.default
    }

    pub fn overrides(&self) -> &BTreeMap<i64, T> {
        &self.overrides
    }

    pub fn is_position_independent(&self) -> bool {
        self.overrides.is_empty()
    }

    /// The default law followed by every override.
    pub fn laws(&self) -> impl Iterator<Item = &T> {
        std::iter::once(&self.default).chain(self.overrides.values())
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> PositionalLaw<U> {
        PositionalLaw {
            default: f(&self.default),
            overrides: self.overrides.iter().map(|(k, v)| (*k, f(v))).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSpec {
    pub offspring: PositionalLaw<OffspringLaw>,
    pub displacement: PositionalLaw<DisplacementLaw>,
}

impl GenerationSpec {
    pub fn new(offspring: OffspringLaw, displacement: DisplacementLaw) -> Self {
        GenerationSpec {
            offspring: PositionalLaw::uniform(offspring),
            displacement: PositionalLaw::uniform(displacement),
        }
    }
}

/// Declared position-independence flags. `None` means "infer from the
/// presence of position overrides".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpecFlags {
    pub branching_position_independent: Option<bool>,
    pub displacement_position_independent: Option<bool>,
}

/// An unvalidated BRW description.
#[derive(Debug, Clone, PartialEq)]
pub struct BrwSpec {
    pub generations: Vec<GenerationSpec>,
    pub flags: SpecFlags,
}

impl BrwSpec {
    pub fn new(generations: Vec<GenerationSpec>) -> Self {
        BrwSpec {
            generations,
            flags: SpecFlags::default(),
        }
    }

    /// `n` identical generations.
    pub fn homogeneous(n: usize, offspring: OffspringLaw, displacement: DisplacementLaw) -> Self {
        Self::new(vec![GenerationSpec::new(offspring, displacement); n])
    }

    pub fn with_flags(mut self, flags: SpecFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn validate(self) -> Result<ValidatedSpec, SpecErrors> {
        validate_spec(self)
    }
}

/// Where in a spec a violation was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    /// 1-based generation index.
    pub generation: usize,
    /// Parent position of an override, `None` for the default law.
    pub position: Option<i64>,
    pub law: LawKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawKind {
    Offspring,
    Displacement,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let law = match self.law {
            LawKind::Offspring => "offspring",
            LawKind::Displacement => "displacement",
        };
        write!(f, "generation {} {law}", self.generation)?;
        if let Some(u) = self.position {
            write!(f, " (override at position {u})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpecViolation {
    #[error("spec has no generations")]
    EmptyGenerations,
    #[error("{loc}: pmf not normalized (sum = {sum})")]
    PmfNotNormalized { loc: Location, sum: String },
    #[error("{loc}: probability {value} outside [0, 1]")]
    ProbabilityOutOfRange { loc: Location, value: String },
    #[error("{loc}: empty support")]
    EmptySupport { loc: Location },
    #[error("{loc}: offset {offset} listed twice")]
    DuplicateOffset { loc: Location, offset: i64 },
    #[error("{loc}: declared mean {declared} differs from analytic mean {analytic}")]
    MeanMismatch {
        loc: Location,
        declared: String,
        analytic: String,
    },
    #[error("{loc}: {detail}")]
    InvalidParameter { loc: Location, detail: String },
    #[error("flag contradiction: {flag} declared {declared} but the spec {actual} position overrides")]
    FlagContradiction {
        flag: &'static str,
        declared: bool,
        actual: &'static str,
    },
    #[error("{0}")]
    Config(String),
}

/// Every violation found in a spec.
#[derive(Debug, Clone, Error, PartialEq)]
pub struct SpecErrors(pub Vec<SpecViolation>);

impl fmt::Display for SpecErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("mean undefined without the chain law for position-dependent displacements; use oracle::spine_marginal_position")]
    PositionDependentDisplacement,
    #[error(transparent)]
    NotExact(#[from] NotExact),
}

/// Checks every invariant and returns an immutable, shareable handle.
pub fn validate_spec(mut spec: BrwSpec) -> Result<ValidatedSpec, SpecErrors> {
    let mut out = Vec::new();
    if spec.generations.is_empty() {
        out.push(SpecViolation::EmptyGenerations);
    }
    for (i, g) in spec.generations.iter().enumerate() {
        let generation = i + 1;
        let loc = |position, law| Location {
            generation,
            position,
            law,
        };
        g.offspring
            .default_law()
            .check(loc(None, LawKind::Offspring), &mut out);
        for (u, law) in g.offspring.overrides() {
            law.check(loc(Some(*u), LawKind::Offspring), &mut out);
        }
        g.displacement
            .default_law()
            .check(loc(None, LawKind::Displacement), &mut out);
        for (u, law) in g.displacement.overrides() {
            law.check(loc(Some(*u), LawKind::Displacement), &mut out);
        }
    }

    let branching_pi = spec
        .generations
        .iter()
        .all(|g| g.offspring.is_position_independent());
    let displacement_pi = spec
        .generations
        .iter()
        .all(|g| g.displacement.is_position_independent());
    for (flag, declared, actual) in [
        (
            "branching_position_independent",
            spec.flags.branching_position_independent,
            branching_pi,
        ),
        (
            "displacement_position_independent",
            spec.flags.displacement_position_independent,
            displacement_pi,
        ),
    ] {
        if let Some(declared) = declared {
            if declared != actual {
                out.push(SpecViolation::FlagContradiction {
                    flag,
                    declared,
                    actual: if actual { "carries no" } else { "carries" },
                });
            }
        }
    }

    if !out.is_empty() {
        return Err(SpecErrors(out));
    }

    for g in &mut spec.generations {
        g.displacement.default.normalize();
        for law in g.displacement.overrides.values_mut() {
            law.normalize();
        }
    }
    let exact = spec.generations.iter().all(|g| {
        g.offspring.laws().all(OffspringLaw::is_exact)
            && g.displacement.laws().all(DisplacementLaw::is_exact)
    });
    Ok(ValidatedSpec {
        spec,
        branching_pi,
        displacement_pi,
        exact,
    })
}

/// A spec that passed [`validate_spec`]. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSpec {
    spec: BrwSpec,
    branching_pi: bool,
    displacement_pi: bool,
    exact: bool,
}

impl ValidatedSpec {
    /// Number of generations `n`.
    pub fn n(&self) -> usize {
        self.spec.generations.len()
    }

    pub fn generations(&self) -> &[GenerationSpec] {
        &self.spec.generations
    }

    /// 1-based access.
    pub fn generation(&self, i: usize) -> &GenerationSpec {
        &self.spec.generations[i - 1]
    }

    pub fn spec(&self) -> &BrwSpec {
        &self.spec
    }

    pub fn branching_position_independent(&self) -> bool {
        self.branching_pi
    }

    pub fn displacement_position_independent(&self) -> bool {
        self.displacement_pi
    }

    /// Whether every probability and parameter is an exact rational.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// The expected generation-`n` position `na = Σ_i E[X_i]`.
    pub fn mean_position(&self) -> Result<f64, ModelError> {
        self.mean_position_as::<f64>()
    }

    pub fn mean_position_as<W: Weight>(&self) -> Result<W, ModelError> {
        if !self.displacement_pi {
            return Err(ModelError::PositionDependentDisplacement);
        }
        let mut acc = W::zero();
        for g in &self.spec.generations {
            acc = acc + g.displacement.default_law().mean::<W>()?;
        }
        Ok(acc)
    }

    /// Per-generation step ranges `b_i - a_i`.
    pub fn hoeffding_ranges(&self) -> Result<Vec<u64>, ModelError> {
        if !self.displacement_pi {
            return Err(ModelError::PositionDependentDisplacement);
        }
        Ok(self
            .spec
            .generations
            .iter()
            .map(|g| g.displacement.default_law().width())
            .collect())
    }

    /// `Π_i m_i`, the expected generation-`n` population for
    /// position-independent branching.
    pub fn expected_population(&self) -> Option<f64> {
        if !self.branching_pi {
            return None;
        }
        Some(
            self.spec
                .generations
                .iter()
                .map(|g| g.offspring.default_law().mean().to_f64())
                .product(),
        )
    }
}

//! Experiment drivers behind the `brw-bench` command line.
//!
//! Each mode turns a resolved [`ExperimentConfig`] into a report that embeds
//! the exact config that produced it (plus its SHA-256), so feeding a report
//! back as `--config` reproduces it byte for byte.

use std::fmt;
use std::str::FromStr;

use num::rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bounds::{hoeffding_constant, rw_bound, theorem_bound, BoundParams, BoundsError};
use crate::config::{ConfigError, ConfigFile};
use crate::empirics::{deviation_rate_from_quantiles, quantile, DeviationEstimate, EmpiricsError};
use crate::model::ValidatedSpec;
use crate::oracle::{
    enumerate_tiny_forest_with_budget, exact_rw_distribution, exact_tail, extinction_probability,
    reduction_distance_with_budget, spine_law_with_budget, spine_marginal_position, OracleError,
    DEFAULT_BUDGET,
};
use crate::prob::Weight;
use crate::simulator::{simulate_forest_with_workers, SimError, DEFAULT_CAP};

pub const TOOL_NAME: &str = "brw-bench";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_TREES: u64 = 10_000;
pub const DEFAULT_ALPHA_GRID: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Tolerance for the forest identity in float mode.
const FLOAT_IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    VerifyTheorem,
    OracleCheck,
    BoundCurve,
    Simulate,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::VerifyTheorem,
        Mode::OracleCheck,
        Mode::BoundCurve,
        Mode::Simulate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::VerifyTheorem => "verify-theorem",
            Mode::OracleCheck => "oracle-check",
            Mode::BoundCurve => "bound-curve",
            Mode::Simulate => "simulate",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub trees: Option<u64>,
    pub seed: Option<u64>,
    pub cap: Option<u64>,
    pub c_override: Option<f64>,
    pub lambda_grid: Option<Vec<f64>>,
    pub alpha_grid: Option<Vec<f64>>,
    pub budget: Option<u64>,
}

/// Fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// The config file with every experiment setting filled in.
    pub source: ConfigFile,
    pub spec: ValidatedSpec,
    pub trees: u64,
    pub master_seed: u64,
    pub lambda_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub cap: u64,
    pub c_override: Option<f64>,
    pub budget: u64,
    /// Worker threads, `0` for the global pool. Never part of a report.
    pub workers: usize,
}

/// `{⌈√n⌉, 2⌈√n⌉, 3⌈√n⌉}`.
pub fn default_lambda_grid(n: usize) -> Vec<f64> {
    let mut r = 1usize;
    while r * r < n {
        r += 1;
    }
    (1..=3).map(|k| (k * r) as f64).collect()
}

impl ExperimentConfig {
    pub fn resolve(
        mode: Mode,
        file: ConfigFile,
        overrides: &Overrides,
        workers: usize,
    ) -> Result<Self, ConfigError> {
        let spec = file.validated_spec()?;
        let e = &file.experiment;
        let trees = overrides.trees.or(e.trees).unwrap_or(DEFAULT_TREES);
        let master_seed = overrides.seed.or(e.seed).unwrap_or(0);
        let cap = overrides.cap.or(e.cap).unwrap_or(DEFAULT_CAP);
        let budget = overrides.budget.or(e.budget).unwrap_or(DEFAULT_BUDGET);
        let c_override = overrides.c_override.or(e.c_override);
        let lambda_grid = overrides
            .lambda_grid
            .clone()
            .or_else(|| e.lambda_grid.clone())
            .unwrap_or_else(|| default_lambda_grid(spec.n()));
        let alpha_grid = overrides
            .alpha_grid
            .clone()
            .or_else(|| e.alpha_grid.clone())
            .unwrap_or_else(|| DEFAULT_ALPHA_GRID.to_vec());

        let bad = |msg: String| Err(ConfigError::Experiment(msg));
        if trees == 0 {
            return bad("trees must be at least 1".into());
        }
        if cap == 0 {
            return bad("cap must be at least 1".into());
        }
        if lambda_grid.is_empty() {
            return bad("lambda_grid is empty".into());
        }
        if let Some(l) = lambda_grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return bad(format!("lambda {l} must be finite and non-negative"));
        }
        if alpha_grid.is_empty() {
            return bad("alpha_grid is empty".into());
        }
        if let Some(a) = alpha_grid.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return bad(format!("alpha {a} outside (0, 1]"));
        }
        if let Some(c) = c_override {
            if !(c.is_finite() && c > 0.0) {
                return bad(format!("c override {c} must be positive"));
            }
        }

        let mut source = file;
        source.experiment.trees = Some(trees);
        source.experiment.seed = Some(master_seed);
        source.experiment.cap = Some(cap);
        source.experiment.budget = Some(budget);
        source.experiment.c_override = c_override;
        source.experiment.lambda_grid = Some(lambda_grid.clone());
        source.experiment.alpha_grid = Some(alpha_grid.clone());
        Ok(ExperimentConfig {
            mode,
            source,
            spec,
            trees,
            master_seed,
            lambda_grid,
            alpha_grid,
            cap,
            c_override,
            budget,
            workers,
        })
    }

    /// SHA-256 of the embedded config's JSON encoding.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(&self.source).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("all {trees} trees exceeded the population cap {cap}")]
    AllOverflowed { trees: u64, cap: u64 },
    #[error("no surviving trees ({extinct} extinct, {overflowed} over the cap)")]
    NoSurvivors { extinct: u64, overflowed: u64 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Empirics(#[from] EmpiricsError),
}

impl ExperimentError {
    /// 1 for usage and config problems, 3 for resource limits.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::AllOverflowed { .. }
            | ExperimentError::Oracle(OracleError::BudgetExceeded { .. }) => 3,
            _ => 1,
        }
    }
}

/// How the exponent constant `c` was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CSource {
    /// `c = 2n / Σ w_i²` from the step ranges `w_i`.
    Hoeffding { ranges: Vec<u64>, formula: String },
    /// Supplied by the user.
    Override,
}

fn resolve_c(cfg: &ExperimentConfig) -> Result<(f64, CSource), ExperimentError> {
    if let Some(c) = cfg.c_override {
        return Ok((c, CSource::Override));
    }
    let ranges = cfg.spec.hoeffding_ranges().map_err(|_| {
        ExperimentError::Unsupported(
            "c cannot be derived for position-dependent displacements; pass --c-override".into(),
        )
    })?;
    let c = hoeffding_constant(&ranges)?;
    Ok((
        c,
        CSource::Hoeffding {
            ranges,
            formula: "c = 2n / sum(w_i^2)".into(),
        },
    ))
}

fn center(cfg: &ExperimentConfig) -> Result<f64, ExperimentError> {
    match cfg.spec.mean_position() {
        Ok(na) => Ok(na),
        Err(_) => {
            let law = spine_law_with_budget::<f64>(&cfg.spec, cfg.budget)?;
            Ok(spine_marginal_position(&law).mean())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violation,
    NotCovered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyMetadata {
    pub n: usize,
    pub na: f64,
    pub c: f64,
    pub c_source: CSource,
    pub trees_requested: u64,
    pub trees_surviving: u64,
    pub trees_extinct: u64,
    pub trees_overflowed: u64,
    pub extinction_fraction: f64,
    pub master_seed: u64,
    pub cap: u64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub theorem_bound: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub covered: bool,
    /// α-quantile of the random walk `S_n`, for comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rw_quantile: Option<i64>,
    pub estimate: DeviationEstimate,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub report_kind: String,
    pub tool: String,
    pub tool_version: String,
    pub config_hash: String,
    pub metadata: VerifyMetadata,
    pub points: Vec<VerifyPoint>,
    pub violations: u64,
    pub config: ConfigFile,
}

/// Simulates the forest once and checks every `(λ, α)` grid point against
/// the quantile bound. A point is a violation only if the Wilson 99% lower
/// limit of the observed two-sided rate exceeds the bound.
pub fn run_verify_theorem(cfg: &ExperimentConfig) -> Result<VerifyReport, ExperimentError> {
    let (c, c_source) = resolve_c(cfg)?;
    let na = center(cfg)?;
    let n = cfg.spec.n();
    let forest = simulate_forest_with_workers(&cfg.spec, cfg.trees, cfg.master_seed, cfg.cap, cfg.workers)?;
    if forest.surviving.is_empty() {
        if forest.overflowed.len() as u64 == cfg.trees {
            return Err(ExperimentError::AllOverflowed {
                trees: cfg.trees,
                cap: cfg.cap,
            });
        }
        return Err(ExperimentError::NoSurvivors {
            extinct: forest.extinct_count(),
            overflowed: forest.overflowed.len() as u64,
        });
    }
    let rw = exact_rw_distribution::<f64>(&cfg.spec).ok();

    let per_alpha: Vec<Vec<i64>> = cfg
        .alpha_grid
        .iter()
        .map(|&a| {
            forest
                .surviving
                .iter()
                .map(|t| quantile(t.leaves.as_ref().expect("surviving"), a))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let mut points = Vec::new();
    for &lambda in &cfg.lambda_grid {
        let tb = theorem_bound(&BoundParams::new(c, n, lambda)?);
        for (&alpha, qs) in cfg.alpha_grid.iter().zip(&per_alpha) {
            let estimate = deviation_rate_from_quantiles(qs, alpha, lambda, na)?;
            let covered = !tb.window.is_empty() && tb.window.contains(alpha);
            let verdict = if !covered {
                Verdict::NotCovered
            } else if estimate.ci_two_sided.lo > tb.two_sided {
                Verdict::Violation
            } else {
                Verdict::Consistent
            };
            points.push(VerifyPoint {
                lambda,
                alpha,
                theorem_bound: tb.two_sided,
                alpha_lo: tb.window.lo,
                alpha_hi: tb.window.hi,
                covered,
                rw_quantile: rw.as_ref().and_then(|p| p.quantile(alpha)),
                estimate,
                verdict,
            });
        }
    }
    let violations = points
        .iter()
        .filter(|p| p.verdict == Verdict::Violation)
        .count() as u64;
    Ok(VerifyReport {
        report_kind: Mode::VerifyTheorem.to_string(),
        tool: TOOL_NAME.into(),
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.config_hash(),
        metadata: VerifyMetadata {
            n,
            na,
            c,
            c_source,
            trees_requested: cfg.trees,
            trees_surviving: forest.surviving.len() as u64,
            trees_extinct: forest.extinct_count(),
            trees_overflowed: forest.overflowed.len() as u64,
            extinction_fraction: forest.extinction_fraction(),
            master_seed: cfg.master_seed,
            cap: cfg.cap,
            confidence: crate::empirics::CONFIDENCE,
        },
        points,
        violations,
        config: cfg.source.clone(),
    })
}

/// A number reported in both exact and floating form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Value {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub value: f64,
}

impl Value {
    fn of<W: Weight>(w: &W) -> Self {
        Value {
            exact: W::EXACT.then(|| w.render()),
            value: w.to_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestIdentityRow {
    pub lambda: f64,
    pub threshold: Value,
    pub expected_exceedance: Value,
    pub tail: Value,
    pub difference: Value,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Check<T> {
    Checked { result: T },
    Skipped { reason: String },
}

fn skip<T>(reason: &str) -> Check<T> {
    Check::Skipped {
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub report_kind: String,
    pub tool: String,
    pub tool_version: String,
    pub config_hash: String,
    /// `"rational"` or `"float"`.
    pub arithmetic: String,
    pub n: usize,
    pub reduction_distance: Value,
    pub forest_identity: Check<Vec<ForestIdentityRow>>,
    pub extinction: Check<Vec<Value>>,
    /// Every checked identity holds (exactly in rational mode).
    pub all_hold: bool,
    pub config: ConfigFile,
}

/// Exact identity checks: spine-law reduction distance and the forest
/// exceedance identity over the λ grid.
pub fn run_oracle_check(cfg: &ExperimentConfig) -> Result<OracleReport, ExperimentError> {
    if cfg.spec.is_exact() {
        oracle_check::<BigRational>(cfg, "rational")
    } else {
        oracle_check::<f64>(cfg, "float")
    }
}

fn oracle_check<W: Weight>(cfg: &ExperimentConfig, arithmetic: &str) -> Result<OracleReport, ExperimentError> {
    let spec = &cfg.spec;
    let distance = reduction_distance_with_budget::<W>(spec, cfg.budget)?;

    let forest_identity = if !spec.branching_position_independent() {
        skip("theorem hypothesis (a) violated: branching depends on position")
    } else if !spec.displacement_position_independent() {
        skip("displacement laws depend on position; no random walk (p_i) to compare with")
    } else if spec.generations().iter().any(|g| {
        matches!(
            g.offspring.default_law().kind(),
            crate::model::OffspringKind::Poisson(_)
        )
    }) {
        skip("offspring law has unbounded support")
    } else {
        let mut rows = Vec::new();
        for &lambda in &cfg.lambda_grid {
            let l = W::from_f64(lambda).map_err(OracleError::from)?;
            let t = match enumerate_tiny_forest_with_budget::<W>(spec, &l, cfg.budget) {
                Ok(t) => t,
                Err(OracleError::NoSurvival) => {
                    rows.clear();
                    break;
                }
                Err(e) => return Err(e.into()),
            };
            let diff = t.difference();
            let holds = if W::EXACT {
                diff.is_zero()
            } else {
                diff.to_f64().abs() <= FLOAT_IDENTITY_TOLERANCE
            };
            rows.push(ForestIdentityRow {
                lambda,
                threshold: Value::of(&t.threshold),
                expected_exceedance: Value::of(&t.expected_exceedance),
                tail: Value::of(&t.tail),
                difference: Value::of(&diff),
                holds,
            });
        }
        if rows.is_empty() {
            skip("every tree dies out")
        } else {
            Check::Checked { result: rows }
        }
    };

    let extinction = match extinction_probability::<W>(spec, spec.n()) {
        Ok(q) => Check::Checked {
            result: q.iter().map(Value::of).collect(),
        },
        Err(e) => skip(&e.to_string()),
    };

    let all_hold = match &forest_identity {
        Check::Checked { result } => result.iter().all(|r| r.holds),
        Check::Skipped { .. } => true,
    };
    Ok(OracleReport {
        report_kind: Mode::OracleCheck.to_string(),
        tool: TOOL_NAME.into(),
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.config_hash(),
        arithmetic: arithmetic.into(),
        n: spec.n(),
        reduction_distance: Value::of(&distance),
        forest_identity,
        extinction,
        all_hold,
        config: cfg.source.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurveRow {
    pub lambda: f64,
    /// `P(S_n - na >= λ)`.
    pub exact_tail: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_tail_rational: Option<String>,
    pub rw_bound: f64,
    pub thm_bound: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurveReport {
    pub report_kind: String,
    pub tool: String,
    pub tool_version: String,
    pub config_hash: String,
    pub n: usize,
    pub na: f64,
    pub c: f64,
    pub c_source: CSource,
    pub rows: Vec<BoundCurveRow>,
    pub config: ConfigFile,
}

pub const BOUND_CURVE_COLUMNS: &str = "lambda,exact_tail,rw_bound,thm_bound,alpha_lo,alpha_hi";

/// Exact one-sided tail of the walk against the random-walk and quantile
/// bounds over the λ grid.
pub fn run_bound_curve(cfg: &ExperimentConfig) -> Result<BoundCurveReport, ExperimentError> {
    if !cfg.spec.displacement_position_independent() {
        return Err(ExperimentError::Unsupported(
            "bound-curve needs position-independent displacements".into(),
        ));
    }
    let (c, c_source) = resolve_c(cfg)?;
    let n = cfg.spec.n();
    let tails: Vec<(f64, Option<String>)> = if cfg.spec.is_exact() {
        let pmf = exact_rw_distribution::<BigRational>(&cfg.spec)?;
        let na = cfg.spec.mean_position_as::<BigRational>().map_err(OracleError::from)?;
        cfg.lambda_grid
            .iter()
            .map(|&l| {
                let l = BigRational::from_f64(l).map_err(OracleError::from)?;
                let t = exact_tail(&pmf, &(na.clone() + l));
                Ok((t.to_f64(), Some(t.render())))
            })
            .collect::<Result<_, ExperimentError>>()?
    } else {
        let pmf = exact_rw_distribution::<f64>(&cfg.spec)?;
        let na = cfg.spec.mean_position().map_err(OracleError::from)?;
        cfg.lambda_grid
            .iter()
            .map(|&l| (exact_tail(&pmf, &(na + l)), None))
            .collect()
    };
    let mut rows = Vec::new();
    for (&lambda, (tail, rational)) in cfg.lambda_grid.iter().zip(tails) {
        let p = BoundParams::new(c, n, lambda)?;
        let tb = theorem_bound(&p);
        rows.push(BoundCurveRow {
            lambda,
            exact_tail: tail,
            exact_tail_rational: rational,
            rw_bound: rw_bound(&p),
            thm_bound: tb.two_sided,
            alpha_lo: tb.window.lo,
            alpha_hi: tb.window.hi,
        });
    }
    Ok(BoundCurveReport {
        report_kind: Mode::BoundCurve.to_string(),
        tool: TOOL_NAME.into(),
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.config_hash(),
        n,
        na: cfg.spec.mean_position().map_err(OracleError::from)?,
        c,
        c_source,
        rows,
        config: cfg.source.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeStatus {
    Survived,
    Extinct,
    Overflow,
}

impl TreeStatus {
    fn as_str(&self) -> &'static str {
        match self {
            TreeStatus::Survived => "survived",
            TreeStatus::Extinct => "extinct",
            TreeStatus::Overflow => "overflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRow {
    pub tree_index: u64,
    pub seed: u64,
    pub status: TreeStatus,
    /// Final population; for overflowed trees the population that hit the cap.
    pub total: u64,
    /// Last generation reached.
    pub generation: usize,
    /// Sparse `pos:count;pos:count` leaf histogram.
    pub histogram: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub report_kind: String,
    pub tool: String,
    pub tool_version: String,
    pub config_hash: String,
    pub n: usize,
    pub master_seed: u64,
    pub trees: Vec<TreeRow>,
    pub config: ConfigFile,
}

pub const SIMULATE_COLUMNS: &str = "tree_index,seed,status,total,generation,histogram";

/// Raw per-tree dump of one forest.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulateReport, ExperimentError> {
    let n = cfg.spec.n();
    let forest = simulate_forest_with_workers(&cfg.spec, cfg.trees, cfg.master_seed, cfg.cap, cfg.workers)?;
    let mut rows: Vec<TreeRow> = forest
        .completed()
        .into_iter()
        .map(|t| TreeRow {
            tree_index: t.tree_index,
            seed: t.seed,
            status: if t.is_extinct() {
                TreeStatus::Extinct
            } else {
                TreeStatus::Survived
            },
            total: t.final_size(),
            generation: match &t.leaves {
                Some(_) => n,
                None => t.sizes.iter().position(|&s| s == 0).unwrap_or(n),
            },
            histogram: t
                .leaves
                .as_ref()
                .map(|h| h.to_sparse_string())
                .unwrap_or_default(),
        })
        .collect();
    rows.extend(forest.overflowed.iter().map(|o| TreeRow {
        tree_index: o.tree_index,
        seed: o.seed,
        status: TreeStatus::Overflow,
        total: o.population,
        generation: o.generation,
        histogram: String::new(),
    }));
    rows.sort_by_key(|r| r.tree_index);
    if rows.iter().all(|r| r.status == TreeStatus::Overflow) {
        return Err(ExperimentError::AllOverflowed {
            trees: cfg.trees,
            cap: cfg.cap,
        });
    }
    Ok(SimulateReport {
        report_kind: Mode::Simulate.to_string(),
        tool: TOOL_NAME.into(),
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.config_hash(),
        n,
        master_seed: cfg.master_seed,
        trees: rows,
        config: cfg.source.clone(),
    })
}

/// Output of any mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Verify(VerifyReport),
    Oracle(OracleReport),
    BoundCurve(BoundCurveReport),
    Simulate(SimulateReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format {s:?}")),
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, ExperimentError> {
    Ok(match cfg.mode {
        Mode::VerifyTheorem => Report::Verify(run_verify_theorem(cfg)?),
        Mode::OracleCheck => Report::Oracle(run_oracle_check(cfg)?),
        Mode::BoundCurve => Report::BoundCurve(run_bound_curve(cfg)?),
        Mode::Simulate => Report::Simulate(run_simulate(cfg)?),
    })
}

impl Report {
    /// CSV for the table-shaped modes, JSON for the full reports.
    pub fn default_format(&self) -> Format {
        match self {
            Report::BoundCurve(_) | Report::Simulate(_) => Format::Csv,
            Report::Verify(_) | Report::Oracle(_) => Format::Json,
        }
    }

    /// 2 when a statistical verdict or exact identity failed, else 0.
    pub fn exit_code(&self) -> i32 {
        match self {
            Report::Verify(r) if r.violations > 0 => 2,
            Report::Oracle(r) if !r.all_hold => 2,
            _ => 0,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = match self {
            Report::Verify(r) => serde_json::to_string_pretty(r),
            Report::Oracle(r) => serde_json::to_string_pretty(r),
            Report::BoundCurve(r) => serde_json::to_string_pretty(r),
            Report::Simulate(r) => serde_json::to_string_pretty(r),
        }
        .expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            Report::Verify(r) => {
                out.push_str("lambda,alpha,theorem_bound,alpha_lo,alpha_hi,covered,rate_upper,rate_lower,rate_two_sided,ci_lo,ci_hi,verdict\n");
                for p in &r.points {
                    let e = &p.estimate;
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                        p.lambda,
                        p.alpha,
                        p.theorem_bound,
                        p.alpha_lo,
                        p.alpha_hi,
                        p.covered,
                        e.rate_upper,
                        e.rate_lower,
                        e.rate_two_sided,
                        e.ci_two_sided.lo,
                        e.ci_two_sided.hi,
                        serde_json::to_value(p.verdict).unwrap().as_str().unwrap()
                    ));
                }
            }
            Report::Oracle(r) => {
                out.push_str("lambda,threshold,expected_exceedance,tail,difference,holds\n");
                if let Check::Checked { result } = &r.forest_identity {
                    let v = |x: &Value| x.exact.clone().unwrap_or_else(|| x.value.to_string());
                    for row in result {
                        out.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            row.lambda,
                            v(&row.threshold),
                            v(&row.expected_exceedance),
                            v(&row.tail),
                            v(&row.difference),
                            row.holds
                        ));
                    }
                }
            }
            Report::BoundCurve(r) => {
                out.push_str(BOUND_CURVE_COLUMNS);
                out.push('\n');
                for row in &r.rows {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        row.lambda, row.exact_tail, row.rw_bound, row.thm_bound, row.alpha_lo, row.alpha_hi
                    ));
                }
            }
            Report::Simulate(r) => {
                out.push_str(SIMULATE_COLUMNS);
                out.push('\n');
                for t in &r.trees {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        t.tree_index,
                        t.seed,
                        t.status.as_str(),
                        t.total,
                        t.generation,
                        t.histogram
                    ));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
        assert!("verify".parse::<Mode>().is_err());
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
    }

    #[test]
    fn lambda_grid_uses_the_integer_square_root_ceiling() {
        assert_eq!(default_lambda_grid(16), vec![4.0, 8.0, 12.0]);
        assert_eq!(default_lambda_grid(17), vec![5.0, 10.0, 15.0]);
        assert_eq!(default_lambda_grid(2), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn values_carry_exact_text_only_for_rationals() {
        let exact = Value::of(&BigRational::new(1.into(), 6.into()));
        assert_eq!(exact.exact.as_deref(), Some("1/6"));
        assert!((exact.value - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(Value::of(&0.25f64), Value { exact: None, value: 0.25 });
    }

    #[test]
    fn exit_codes() {
        let budget = ExperimentError::Oracle(OracleError::BudgetExceeded { required: 11, budget: 10 });
        assert_eq!(budget.exit_code(), 3);
        assert_eq!(ExperimentError::AllOverflowed { trees: 1, cap: 1 }.exit_code(), 3);
        assert_eq!(ExperimentError::NoSurvivors { extinct: 3, overflowed: 0 }.exit_code(), 1);
        assert_eq!(ExperimentError::Unsupported("x".into()).exit_code(), 1);
    }
}

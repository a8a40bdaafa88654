//! Config file format (TOML or JSON).
//!
//! ```toml
//! [[generations]]
//! repeat = 16                                   # optional, default 1
//! offspring = { kind = "poisson", params = { mean = "6/5" } }
//! displacement = { support = [[-1, "1/2"], [1, "1/2"]] }
//!
//! [[generations.position_overrides]]            # optional
//! position = 3
//! offspring = { kind = "deterministic", params = { k = 2 } }
//!
//! [experiment]                                  # optional
//! trees = 10000
//! seed = 7
//! lambda_grid = [4, 8, 12]
//! ```
//!
//! Probabilities may be numbers or strings. Strings (`"3/4"`, `"0.75"`) and
//! integer-valued numbers are exact; other numbers are floats.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_spec, BrwSpec, DisplacementLaw, GenerationSpec, OffspringKind, OffspringLaw,
    PositionalLaw, SpecErrors, SpecFlags, SpecViolation, ValidatedSpec,
};
use crate::prob::Prob;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid spec:\n{0}")]
    Spec(#[from] SpecErrors),
    #[error("invalid experiment settings: {0}")]
    Experiment(String),
}

/// A probability as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbValue {
    Text(String),
    Number(f64),
}

impl ProbValue {
    pub fn to_prob(&self) -> Result<Prob, String> {
        match self {
            ProbValue::Text(s) => s.parse::<Prob>().map_err(|e| e.to_string()),
            ProbValue::Number(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => {
                Ok(Prob::integer(*v as i64))
            }
            ProbValue::Number(v) => Ok(Prob::float(*v)),
        }
    }
}

impl From<&Prob> for ProbValue {
    fn from(p: &Prob) -> Self {
        match p {
            Prob::Exact(_) => ProbValue::Text(p.to_string()),
            Prob::Float(v) => ProbValue::Number(*v),
        }
    }
}

impl fmt::Display for ProbValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbValue::Text(s) => write!(f, "{s:?}"),
            ProbValue::Number(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffspringKindName {
    Deterministic,
    BernoulliSplit,
    Poisson,
    FiniteTable,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffspringParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<ProbValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<ProbValue>,
    /// `count -> probability`; keys are decimal integers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<BTreeMap<String, ProbValue>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffspringConfig {
    pub kind: OffspringKindName,
    #[serde(default)]
    pub params: OffspringParams,
    /// Optional declared mean, checked against the parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<ProbValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AtomConfig {
    Pair(i64, ProbValue),
    Named { offset: i64, prob: ProbValue },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementConfig {
    pub support: Vec<AtomConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideConfig {
    pub position: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offspring: Option<OffspringConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<DisplacementConfig>,
}

fn one() -> usize {
    1
}

fn is_one(v: &usize) -> bool {
    *v == 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub repeat: usize,
    pub offspring: OffspringConfig,
    pub displacement: DisplacementConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub position_overrides: Vec<OverrideConfig>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branching_position_independent: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement_position_independent: Option<bool>,
}

/// Experiment settings; every field can also be given on the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trees: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_override: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

/// Whole config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "is_default_flags")]
    pub flags: FlagsConfig,
    pub generations: Vec<GenerationConfig>,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

fn is_default_flags(f: &FlagsConfig) -> bool {
    *f == FlagsConfig::default()
}

/// Reports embed the config that produced them under this key; such a
/// report is accepted wherever a config is.
#[derive(Deserialize)]
struct EmbeddedConfig {
    config: ConfigFile,
}

impl ConfigFile {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value =
            serde_json::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if value.get("config").is_some() && value.get("generations").is_none() {
            let e: EmbeddedConfig =
                serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))?;
            return Ok(e.config);
        }
        serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Picks the format by extension; unknown extensions try JSON, then TOML.
    pub fn from_str_with_hint(s: &str, extension: Option<&str>) -> Result<Self, ConfigError> {
        match extension {
            Some("toml") => Self::from_toml_str(s),
            Some("json") => Self::from_json_str(s),
            _ => Self::from_json_str(s).or_else(|_| Self::from_toml_str(s)),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str_with_hint(&text, path.extension().and_then(|e| e.to_str()))
    }

    /// Builds the model, collecting every parse problem before validating.
    pub fn to_spec(&self) -> Result<BrwSpec, SpecErrors> {
        let mut errors = Vec::new();
        let mut generations = Vec::new();
        for (i, g) in self.generations.iter().enumerate() {
            let ctx = format!("generations[{i}]");
            if g.repeat == 0 {
                errors.push(SpecViolation::Config(format!("{ctx}: repeat must be at least 1")));
                continue;
            }
            let offspring = offspring_law(&g.offspring, &ctx, &mut errors);
            let displacement = displacement_law(&g.displacement, &ctx, &mut errors);
            let (Some(offspring), Some(displacement)) = (offspring, displacement) else {
                continue;
            };
            let mut gen = GenerationSpec {
                offspring: PositionalLaw::uniform(offspring),
                displacement: PositionalLaw::uniform(displacement),
            };
            for (j, o) in g.position_overrides.iter().enumerate() {
                let octx = format!("{ctx}.position_overrides[{j}]");
                if o.offspring.is_none() && o.displacement.is_none() {
                    errors.push(SpecViolation::Config(format!(
                        "{octx}: override must set offspring or displacement"
                    )));
                }
                if let Some(off) = &o.offspring {
                    if let Some(law) = offspring_law(off, &octx, &mut errors) {
                        gen.offspring = gen.offspring.with_override(o.position, law);
                    }
                }
                if let Some(d) = &o.displacement {
                    if let Some(law) = displacement_law(d, &octx, &mut errors) {
                        gen.displacement = gen.displacement.with_override(o.position, law);
                    }
                }
            }
            generations.extend(std::iter::repeat_n(gen, g.repeat));
        }
        if !errors.is_empty() {
            return Err(SpecErrors(errors));
        }
        Ok(BrwSpec::new(generations).with_flags(SpecFlags {
            branching_position_independent: self.flags.branching_position_independent,
            displacement_position_independent: self.flags.displacement_position_independent,
        }))
    }

    pub fn validated_spec(&self) -> Result<ValidatedSpec, SpecErrors> {
        validate_spec(self.to_spec()?)
    }
}

fn prob(v: &ProbValue, ctx: &str, what: &str, errors: &mut Vec<SpecViolation>) -> Option<Prob> {
    match v.to_prob() {
        Ok(p) => Some(p),
        Err(e) => {
            errors.push(SpecViolation::Config(format!("{ctx}: {what}: {e}")));
            None
        }
    }
}

fn offspring_law(
    c: &OffspringConfig,
    ctx: &str,
    errors: &mut Vec<SpecViolation>,
) -> Option<OffspringLaw> {
    let before = errors.len();
    let missing = |name: &str, errors: &mut Vec<SpecViolation>| {
        errors.push(SpecViolation::Config(format!(
            "{ctx}: offspring kind {:?} needs parameter `{name}`",
            c.kind
        )));
    };
    let kind = match c.kind {
        OffspringKindName::Deterministic => match c.params.k {
            Some(k) => Some(OffspringKind::Deterministic(k)),
            None => {
                missing("k", errors);
                None
            }
        },
        OffspringKindName::BernoulliSplit => match &c.params.p {
            Some(p) => prob(p, ctx, "p", errors).map(OffspringKind::BernoulliSplit),
            None => {
                missing("p", errors);
                None
            }
        },
        OffspringKindName::Poisson => match &c.params.mean {
            Some(m) => prob(m, ctx, "mean", errors).map(OffspringKind::Poisson),
            None => {
                missing("mean", errors);
                None
            }
        },
        OffspringKindName::FiniteTable => match &c.params.table {
            Some(table) => {
                let mut entries = Vec::new();
                for (k, p) in table {
                    match k.trim().parse::<u32>() {
                        Ok(k) => {
                            if let Some(p) = prob(p, ctx, "table", errors) {
                                entries.push((k, p));
                            }
                        }
                        Err(_) => errors.push(SpecViolation::Config(format!(
                            "{ctx}: table key {k:?} is not a non-negative integer"
                        ))),
                    }
                }
                Some(OffspringKind::Table(entries))
            }
            None => {
                missing("table", errors);
                None
            }
        },
    };
    let declared = c.mean.as_ref().and_then(|m| prob(m, ctx, "mean", errors));
    if errors.len() > before {
        return None;
    }
    let law = OffspringLaw::new(kind?);
    Some(match declared {
        Some(m) => law.with_declared_mean(m),
        None => law,
    })
}

fn displacement_law(
    c: &DisplacementConfig,
    ctx: &str,
    errors: &mut Vec<SpecViolation>,
) -> Option<DisplacementLaw> {
    let before = errors.len();
    let atoms: Vec<(i64, Prob)> = c
        .support
        .iter()
        .filter_map(|a| {
            let (x, p) = match a {
                AtomConfig::Pair(x, p) => (*x, p),
                AtomConfig::Named { offset, prob } => (*offset, prob),
            };
            prob_of(p, ctx, errors).map(|p| (x, p))
        })
        .collect();
    (errors.len() == before).then(|| DisplacementLaw::new(atoms))
}

fn prob_of(p: &ProbValue, ctx: &str, errors: &mut Vec<SpecViolation>) -> Option<Prob> {
    prob(p, ctx, "displacement", errors)
}

//! Experiment configuration, assembled from an optional config file, an
//! optional target file and inline flags.
//!
//! Every source fills a [`ConfigLayer`]. Layers are merged field by field; a
//! field set in two layers must agree, otherwise the merge fails.

use std::fmt::Debug;
use std::path::Path;

use clap::ValueEnum;
use qudit_rsp::separable::{GroupingPolicy, UsCatalog};
use qudit_rsp::states::qubit_bounds;
use qudit_rsp::{CbitMode, CorrectionStyle, QuditSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Equatorial,
    RealMin,
    Separable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sample,
    #[default]
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    #[default]
    Case1,
    Case2,
    Case3,
    Case4,
}

impl From<Policy> for GroupingPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Case1 => Self::Case1,
            Policy::Case2 => Self::Case2,
            Policy::Case3 => Self::Case3,
            Policy::Case4 => Self::Case4Enumerate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum UsChoice {
    #[default]
    Identity,
    Permutations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    #[default]
    Collective,
    Factored,
}

impl From<Correction> for CorrectionStyle {
    fn from(c: Correction) -> Self {
        match c {
            Correction::Collective => Self::Collective,
            Correction::Factored => Self::Factored,
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolKind,
    pub target: QuditSpec,
    #[serde(rename = "L")]
    pub pairs: usize,
    pub mode: Mode,
    pub trials: u64,
    pub seed: u64,
    pub policy: Policy,
    pub us_catalog: UsChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_us: Option<usize>,
    pub correction: Correction,
    pub cbits: CbitMode,
}

impl ExperimentConfig {
    pub fn s(&self) -> usize {
        self.target.dim()
    }

    pub fn us_catalog(&self) -> UsCatalog {
        match self.us_catalog {
            UsChoice::Identity => UsCatalog::identity(),
            UsChoice::Permutations => UsCatalog::permutations(self.pairs, self.max_us),
        }
    }
}

/// Partial configuration from one source.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub protocol: Option<ProtocolKind>,
    pub target: Option<QuditSpec>,
    #[serde(rename = "L")]
    pub pairs: Option<usize>,
    pub mode: Option<Mode>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub policy: Option<Policy>,
    pub us_catalog: Option<UsChoice>,
    pub max_us: Option<usize>,
    pub correction: Option<Correction>,
    pub cbits: Option<CbitMode>,
}

fn agree<T: PartialEq + Debug>(field: &str, a: Option<T>, b: Option<T>) -> Result<Option<T>> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(CliError::Config(format!(
            "conflicting values for {field}: {x:?} vs {y:?}"
        ))),
        (Some(x), _) => Ok(Some(x)),
        (None, y) => Ok(y),
    }
}

impl ConfigLayer {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn merge(self, other: Self) -> Result<Self> {
        Ok(Self {
            protocol: agree("protocol", self.protocol, other.protocol)?,
            target: agree("target", self.target, other.target)?,
            pairs: agree("L", self.pairs, other.pairs)?,
            mode: agree("mode", self.mode, other.mode)?,
            trials: agree("trials", self.trials, other.trials)?,
            seed: agree("seed", self.seed, other.seed)?,
            policy: agree("policy", self.policy, other.policy)?,
            us_catalog: agree("us_catalog", self.us_catalog, other.us_catalog)?,
            max_us: agree("max_us", self.max_us, other.max_us)?,
            correction: agree("correction", self.correction, other.correction)?,
            cbits: agree("cbits", self.cbits, other.cbits)?,
        })
    }

    pub fn finish(self) -> Result<ExperimentConfig> {
        let protocol = self
            .protocol
            .ok_or_else(|| CliError::Config("no protocol given".into()))?;
        let target = self
            .target
            .ok_or_else(|| CliError::Config("no target given".into()))?;
        let s = target.dim();
        let pairs = match self.pairs {
            Some(l) if protocol == ProtocolKind::RealMin => {
                let fixed = default_pairs(protocol, s)?;
                if l != fixed {
                    return Err(CliError::Config(format!(
                        "the minimum real protocol always uses L = {fixed} for s = {s}"
                    )));
                }
                l
            }
            Some(l) => {
                let (lo, hi) = qubit_bounds(s)?;
                if l < lo.max(1) || l > hi {
                    return Err(CliError::Config(format!(
                        "L = {l} outside {}..={hi} for s = {s}",
                        lo.max(1)
                    )));
                }
                l
            }
            None => default_pairs(protocol, s)?,
        };
        let mode = self.mode.unwrap_or_default();
        let trials = self.trials.unwrap_or(DEFAULT_TRIALS);
        if mode == Mode::Sample && trials == 0 {
            return Err(CliError::Config(
                "sample mode needs at least one trial".into(),
            ));
        }
        if self.max_us == Some(0) {
            return Err(CliError::Config("max_us must be positive".into()));
        }
        Ok(ExperimentConfig {
            protocol,
            target,
            pairs,
            mode,
            trials,
            seed: self.seed.unwrap_or(0),
            policy: self.policy.unwrap_or_default(),
            us_catalog: self.us_catalog.unwrap_or_default(),
            max_us: self.max_us,
            correction: self.correction.unwrap_or_default(),
            cbits: self.cbits.unwrap_or_default(),
        })
    }
}

/// `⌈log2 s⌉` (at least one pair); the minimum real protocol uses its own table.
pub fn default_pairs(protocol: ProtocolKind, s: usize) -> Result<usize> {
    match protocol {
        ProtocolKind::RealMin => Ok(qudit_rsp::realspace::pairs_for(s)?),
        _ => Ok(qubit_bounds(s)?.0.max(1)),
    }
}

/// Target assembled from `--spec`, `--s`, `--phases` and `--coeffs`.
pub fn inline_target(
    spec: Option<&Path>,
    s: Option<usize>,
    phases: Option<Vec<f64>>,
    coeffs: Option<Vec<f64>>,
) -> Result<Option<QuditSpec>> {
    let from_file = spec
        .map(|p| {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<QuditSpec>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        })
        .transpose()?;
    let from_flags = match (phases, coeffs) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "--phases and --coeffs are mutually exclusive".into(),
            ))
        }
        (Some(p), None) => Some(QuditSpec::equatorial(p)?),
        (None, Some(c)) => Some(QuditSpec::real(c)?),
        (None, None) => None,
    };
    let target = agree("target", from_file, from_flags)?;
    match (s, &target) {
        (Some(s), Some(t)) if t.dim() != s => Err(CliError::Config(format!(
            "--s {s} disagrees with a target of dimension {}",
            t.dim()
        ))),
        (Some(_), None) => Err(CliError::Config(
            "--s needs amplitudes from --phases, --coeffs or --spec".into(),
        )),
        _ => Ok(target),
    }
}

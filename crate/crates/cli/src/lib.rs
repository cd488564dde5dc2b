//! Library behind the `qrsp` binary: experiment configs, runs and reports.

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::{ConfigLayer, ExperimentConfig, Mode, Policy, ProtocolKind, UsChoice};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, BranchRow, ExperimentReport, RunOptions};
pub use report::{emit_report, Format};

use qudit_rsp::separable::{GroupingPolicy, SeparabilityReport};
use qudit_rsp::states::embed;

/// Separability of the (transformed) target under every grouping the policy allows.
pub fn analyze(cfg: &ExperimentConfig) -> Result<Vec<SeparabilityReport>> {
    let v = embed(&cfg.target, cfg.pairs)?;
    let policy: GroupingPolicy = cfg.policy.into();
    policy
        .allowed(cfg.pairs)
        .iter()
        .map(|g| Ok(SeparabilityReport::analyze(&v, g)?))
        .collect()
}

#[derive(Debug, serde::Serialize)]
struct FactorDump {
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

#[derive(Debug, serde::Serialize)]
struct CatalogDump {
    dim: usize,
    operators: Vec<Vec<Vec<f64>>>,
    /// Per operator, `V_j† = left ⊗ right` when such a split exists.
    factorizations: Vec<Option<FactorDump>>,
}

/// The minimum-protocol operator family of dimension `dim` as JSON.
pub fn dump_catalog(dim: usize) -> Result<Vec<u8>> {
    let cat = qudit_rsp::realspace::catalog(dim)?;
    let dump = CatalogDump {
        dim,
        operators: cat.operators().iter().map(|m| m.real_rows()).collect(),
        factorizations: (0..cat.operators().len())
            .map(|j| {
                cat.factorization(j).map(|f| FactorDump {
                    left: f.left.real_rows(),
                    right: f.right.real_rows(),
                })
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&dump)?;
    out.push(b'\n');
    Ok(out)
}

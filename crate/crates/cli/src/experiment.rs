use std::time::Instant;

use qudit_rsp::channel::BranchRecord;
use qudit_rsp::{
    monte_carlo, run_exhaustive, teleport_cost, CbitMode, EquatorialProtocol, Protocol,
    RealMinProtocol, SeparableProtocol,
};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Mode, ProtocolKind};
use crate::error::{CliError, Result};

/// Options that do not change the computed numbers.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record wall-clock time in the report (makes output run-dependent).
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessProbability {
    /// Observed success frequency (sample mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical: Option<f64>,
    /// Summed probability of the successful branches.
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub k: usize,
    pub prob: f64,
    pub success: bool,
    pub fidelity: f64,
    pub cbits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub trials: u64,
    pub successes: u64,
    /// Five standard errors of the exact probability at this trial count.
    pub tolerance_5se: f64,
    pub outcome_counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparablePlanReport {
    pub grouping: Vec<Vec<usize>>,
    pub us_index: usize,
    pub announcement_cbits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub protocol: String,
    pub s: usize,
    #[serde(rename = "L")]
    pub pairs: usize,
    pub success_probability: SuccessProbability,
    pub mean_fidelity_on_success: Option<f64>,
    pub cbits_per_run: f64,
    pub teleport_cbits_baseline: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SampleStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<SeparablePlanReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<Vec<BranchRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

fn build(cfg: &ExperimentConfig) -> Result<(Box<dyn Protocol>, Option<SeparablePlanReport>)> {
    match cfg.protocol {
        ProtocolKind::Equatorial => {
            let phases = cfg.target.phases().ok_or_else(|| {
                CliError::Config("the equatorial protocol needs an equatorial target".into())
            })?;
            // only relative phases matter
            let rebased: Vec<f64> = phases.iter().map(|p| p - phases[0]).collect();
            Ok((
                Box::new(EquatorialProtocol::new(&rebased, cfg.pairs)?),
                None,
            ))
        }
        ProtocolKind::RealMin => {
            let coeffs = cfg.target.real_coeffs()?;
            let p = RealMinProtocol::new(&coeffs, cfg.correction.into())?;
            Ok((Box::new(p), None))
        }
        ProtocolKind::Separable => {
            let us = cfg.us_catalog();
            let p = SeparableProtocol::new(&cfg.target, cfg.pairs, cfg.policy.into(), &us)?;
            let plan = SeparablePlanReport {
                grouping: p.grouping().block_lists(),
                us_index: p.plan().us_index,
                announcement_cbits: p.announcement_cbits(),
            };
            Ok((Box::new(p), Some(plan)))
        }
    }
}

fn row_cbits(r: &BranchRecord, mode: CbitMode) -> f64 {
    r.transcript.cbits(mode)
}

/// Runs one experiment: always builds the exact branch table, and in sample
/// mode also draws `trials` seeded outcomes.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    let start = Instant::now();
    let (protocol, plan) = build(cfg)?;
    let table = run_exhaustive(protocol.as_ref())?;
    // summed branch probabilities can land an ulp outside [0, 1]
    let exact = table.success_probability().clamp(0.0, 1.0);
    let s = protocol.dim();
    let pairs = protocol.pairs();

    let rows: Vec<BranchRow> = table
        .rows
        .iter()
        .map(|r| BranchRow {
            k: r.outcome,
            prob: r.probability,
            success: r.transcript.success,
            fidelity: r.transcript.fidelity,
            cbits: row_cbits(r, cfg.cbits),
        })
        .collect();

    let (empirical, mean_fidelity, cbits_per_run, sampling, branches) = match cfg.mode {
        Mode::Exhaustive => {
            let fid = (exact > 0.0).then(|| {
                rows.iter()
                    .filter(|r| r.success)
                    .map(|r| r.prob * r.fidelity)
                    .sum::<f64>()
                    / exact
            });
            let total: f64 = rows.iter().map(|r| r.prob).sum();
            let cbits = rows.iter().map(|r| r.prob * r.cbits).sum::<f64>() / total;
            (None, fid, cbits, None, Some(rows))
        }
        Mode::Sample => {
            let mc = monte_carlo(protocol.as_ref(), cfg.seed, cfg.trials)?;
            let n = cfg.trials as f64;
            let by_outcome = |k: usize| rows.iter().find(|r| r.k == k);
            let cbits = mc
                .outcome_counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(k, &c)| c as f64 * by_outcome(k).map_or(0.0, |r| r.cbits))
                .sum::<f64>()
                / n;
            let stats = SampleStats {
                trials: mc.trials,
                successes: mc.successes,
                tolerance_5se: 5.0 * (exact * (1.0 - exact) / n).sqrt(),
                outcome_counts: mc.outcome_counts,
            };
            (
                Some(mc.success_frequency),
                mc.mean_fidelity_on_success,
                cbits,
                Some(stats),
                None,
            )
        }
    };

    Ok(ExperimentReport {
        config: cfg.clone(),
        protocol: protocol.name().to_string(),
        s,
        pairs,
        success_probability: SuccessProbability { empirical, exact },
        mean_fidelity_on_success: mean_fidelity,
        cbits_per_run,
        teleport_cbits_baseline: teleport_cost(s, pairs),
        sampling,
        plan,
        branches,
        wall_time_s: opts.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigLayer;
    use qudit_rsp::QuditSpec;

    fn cfg(protocol: ProtocolKind, target: QuditSpec, mode: Mode) -> ExperimentConfig {
        ConfigLayer {
            protocol: Some(protocol),
            target: Some(target),
            mode: Some(mode),
            trials: Some(2000),
            seed: Some(3),
            ..Default::default()
        }
        .finish()
        .unwrap()
    }

    #[test]
    fn equatorial_three_levels() {
        let q = QuditSpec::equatorial(vec![0.0, 0.5, 1.5]).unwrap();
        let r = run_experiment(
            &cfg(ProtocolKind::Equatorial, q, Mode::Exhaustive),
            RunOptions::default(),
        )
        .unwrap();
        assert!((r.success_probability.exact - 0.75).abs() < 1e-12);
        assert_eq!(r.branches.as_ref().unwrap().len(), 4);
        assert!((r.cbits_per_run - 2.0).abs() < 1e-12);
        assert!((r.teleport_cbits_baseline - (3f64.log2() + 2.0)).abs() < 1e-12);
        assert!(r.wall_time_s.is_none());
    }

    #[test]
    fn real_min_eight_levels() {
        let q =
            QuditSpec::real(vec![0.5, 0.1, -0.3, 0.2, 0.4, -0.5, 0.3, 0.33166247903554]).unwrap();
        let r = run_experiment(
            &cfg(ProtocolKind::RealMin, q, Mode::Exhaustive),
            RunOptions::default(),
        )
        .unwrap();
        assert!((r.success_probability.exact - 1.0).abs() < 1e-12);
        assert!((r.cbits_per_run - 3.0).abs() < 1e-12);
        assert!((r.teleport_cbits_baseline - 6.0).abs() < 1e-12);
    }

    #[test]
    fn sample_mode_reports_frequency() {
        let q = QuditSpec::equatorial(vec![0.0, 0.5, 1.5]).unwrap();
        let r = run_experiment(
            &cfg(ProtocolKind::Equatorial, q, Mode::Sample),
            RunOptions::default(),
        )
        .unwrap();
        let stats = r.sampling.unwrap();
        let emp = r.success_probability.empirical.unwrap();
        assert!((emp - 0.75).abs() <= stats.tolerance_5se);
        assert_eq!(stats.outcome_counts.iter().sum::<u64>(), 2000);
        assert!(r.branches.is_none());
    }

    #[test]
    fn complex_target_rejected_by_real_protocols() {
        let q = QuditSpec::equatorial(vec![0.0, 1.0]).unwrap();
        let err = run_experiment(
            &cfg(ProtocolKind::RealMin, q, Mode::Exhaustive),
            RunOptions::default(),
        );
        assert_eq!(err.unwrap_err().exit_code(), 2);
        let q = QuditSpec::real(vec![0.6, 0.8]).unwrap();
        let err = run_experiment(
            &cfg(ProtocolKind::Equatorial, q, Mode::Exhaustive),
            RunOptions::default(),
        );
        assert_eq!(err.unwrap_err().exit_code(), 2);
    }

    #[test]
    fn entangled_target_not_preparable() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = QuditSpec::real(vec![h, 0.0, 0.0, h]).unwrap();
        let err = run_experiment(
            &cfg(ProtocolKind::Separable, q, Mode::Exhaustive),
            RunOptions::default(),
        );
        assert_eq!(err.unwrap_err().exit_code(), 3);
    }
}

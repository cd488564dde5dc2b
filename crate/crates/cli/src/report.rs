use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiment::ExperimentReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// One-line summary used for CSV output in sample mode.
#[derive(Debug, Serialize)]
struct AggregateRow<'a> {
    protocol: &'a str,
    s: usize,
    #[serde(rename = "L")]
    pairs: usize,
    trials: u64,
    seed: u64,
    successes: u64,
    success_probability_empirical: Option<f64>,
    success_probability_exact: f64,
    mean_fidelity_on_success: Option<f64>,
    cbits_per_run: f64,
    teleport_cbits_baseline: f64,
}

/// Serializes a report. Output depends only on the report contents.
pub fn emit_report(r: &ExperimentReport, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(r)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if let Some(rows) = &r.branches {
                for row in rows {
                    w.serialize(row)?;
                }
            } else {
                let stats = r.sampling.as_ref();
                w.serialize(AggregateRow {
                    protocol: &r.protocol,
                    s: r.s,
                    pairs: r.pairs,
                    trials: stats.map_or(0, |s| s.trials),
                    seed: r.config.seed,
                    successes: stats.map_or(0, |s| s.successes),
                    success_probability_empirical: r.success_probability.empirical,
                    success_probability_exact: r.success_probability.exact,
                    mean_fidelity_on_success: r.mean_fidelity_on_success,
                    cbits_per_run: r.cbits_per_run,
                    teleport_cbits_baseline: r.teleport_cbits_baseline,
                })?;
            }
            w.into_inner()
                .map_err(|e| crate::error::CliError::Serialize(e.to_string()))
        }
    }
}

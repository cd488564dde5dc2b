use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qrsp_cli::config::{inline_target, Correction};
use qrsp_cli::{
    analyze, dump_catalog, emit_report, run_experiment, CliError, ConfigLayer, Format, Mode,
    Policy, ProtocolKind, RunOptions, UsChoice,
};
use qudit_rsp::CbitMode;

/// Simulate remote state preparation of a qudit over shared EPR pairs.
#[derive(Debug, Parser)]
#[command(name = "qrsp", version)]
struct Args {
    /// Experiment config file (JSON). Flags that repeat one of its fields must agree with it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    protocol: Option<ProtocolKind>,
    /// Target qudit file (JSON with "kind": equatorial | real | general).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Qudit dimension; checked against the given amplitudes.
    #[arg(long)]
    s: Option<usize>,
    /// Equatorial phases, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    phases: Option<Vec<f64>>,
    /// Real coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    coeffs: Option<Vec<f64>>,
    /// Number of shared EPR pairs (L).
    #[arg(long = "pairs", short = 'L')]
    pairs: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, env = "RSP_SEED")]
    seed: Option<u64>,
    /// Grouping policy for the separable protocol.
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    /// Transforms Alice may apply before grouping.
    #[arg(long, value_enum)]
    us_catalog: Option<UsChoice>,
    /// Keep only the first N permutations of the catalog.
    #[arg(long)]
    max_us: Option<usize>,
    /// Bob's correction for the minimum real protocol.
    #[arg(long, value_enum)]
    correction: Option<Correction>,
    /// Count whole bits per message instead of log2 of the alphabet.
    #[arg(long)]
    integer_cbits: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sampling (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Include wall-clock time in the report.
    #[arg(long)]
    timing: bool,
    /// Print separability of the target under each allowed grouping and exit.
    #[arg(long)]
    analyze: bool,
    /// Print the minimum-protocol operators of this dimension (1, 2, 4 or 8) and exit.
    #[arg(long, value_name = "DIM")]
    dump_catalog: Option<usize>,
}

fn execute(args: Args) -> Result<Vec<u8>, CliError> {
    if let Some(dim) = args.dump_catalog {
        return dump_catalog(dim);
    }
    let target = inline_target(args.spec.as_deref(), args.s, args.phases, args.coeffs)?;
    let flags = ConfigLayer {
        protocol: args.protocol,
        target,
        pairs: args.pairs,
        mode: args.mode,
        trials: args.trials,
        seed: args.seed,
        policy: args.policy,
        us_catalog: args.us_catalog,
        max_us: args.max_us,
        correction: args.correction,
        cbits: args.integer_cbits.then_some(CbitMode::Integer),
    };
    let layer = match &args.config {
        Some(path) => ConfigLayer::from_file(path)?.merge(flags)?,
        None => flags,
    };
    let cfg = layer.finish()?;

    if args.analyze {
        let mut out = serde_json::to_vec_pretty(&analyze(&cfg)?)?;
        out.push(b'\n');
        return Ok(out);
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    let report = pool.install(|| {
        run_experiment(
            &cfg,
            RunOptions {
                timing: args.timing,
            },
        )
    })?;
    emit_report(&report, args.format)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let out_path = args.out.clone();
    let result = execute(args).and_then(|bytes| match &out_path {
        Some(p) => std::fs::write(p, &bytes).map_err(CliError::from),
        None => std::io::stdout().write_all(&bytes).map_err(CliError::from),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::NotPreparable(msg) = &e {
                let failure = serde_json::json!({ "status": "not_preparable", "message": msg });
                println!("{failure}");
            }
            eprintln!("qrsp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

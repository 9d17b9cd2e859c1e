use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dbmlab_cli::{run, verify_outputs, CliError, Experiment, RunConfig};

/// Runs a dbmlab experiment and writes manifest.json, summary.json and rows.csv.
#[derive(Debug, Parser)]
#[command(name = "dbmlab", version)]
struct Args {
    /// Experiment to run; overrides the config field.
    experiment: Experiment,
    /// JSON config; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Matrix size N.
    #[arg(long)]
    n: Option<usize>,
    /// Number of replicas.
    #[arg(long = "n_samples", alias = "n-samples")]
    n_samples: Option<usize>,
    /// Time exponent, `t = N^-tau`.
    #[arg(long)]
    tau: Option<f64>,
    /// Bulk energy E.
    #[arg(long, alias = "E", allow_hyphen_values = true)]
    energy: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other config field as `field=json`, e.g. `dt={"policy":"fixed","dt":1e-4}`.
    #[arg(long = "set", value_name = "FIELD=JSON")]
    set: Vec<String>,
    /// Worker threads for replicas.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Exit with status 1 when any check fails.
    #[arg(long = "assert")]
    assert_checks: bool,
    /// Recompute the checksums of an existing output directory instead of running.
    #[arg(long)]
    verify: bool,
}

fn build_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut value = match &args.config {
        Some(p) => serde_json::to_value(RunConfig::load(p)?),
        None => serde_json::to_value(RunConfig::default()),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    for item in &args.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects FIELD=JSON, got {item}")))?;
        let parsed: serde_json::Value =
            serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
        value[k] = parsed;
    }
    let mut config: RunConfig = serde_json::from_value(value)
        .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
    config.experiment = args.experiment;
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.n {
        config.n = v;
    }
    if let Some(v) = args.n_samples {
        config.n_samples = v;
    }
    if let Some(v) = args.tau {
        config.tau = v;
    }
    if let Some(v) = args.energy {
        config.energy = v;
    }
    if let Some(v) = &args.out {
        config.out = v.clone();
    }
    config.validate()?;
    Ok(config)
}

fn exit_code(e: &CliError) -> ExitCode {
    ExitCode::from(match e {
        CliError::Usage(_) => 2,
        CliError::Io(..) => 3,
        CliError::Verify(_) => 4,
        CliError::Core(_) => 5,
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("dbmlab: {e}");
            return exit_code(&e);
        }
    };
    if args.verify {
        return match verify_outputs(&config.out) {
            Ok(m) => {
                println!(
                    "verified {} artifacts in {}",
                    m.artifacts.len(),
                    config.out.display()
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("dbmlab: {e}");
                exit_code(&e)
            }
        };
    }
    match run(&config, args.workers) {
        Ok(r) => {
            for c in &r.outcome.checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            println!("wrote {}", r.manifest.display());
            if args.assert_checks && !r.outcome.passed() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("dbmlab: {e}");
            exit_code(&e)
        }
    }
}

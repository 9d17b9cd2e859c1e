//! Experiment runner: configuration, seeded replica execution, artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod replicate;

use std::path::PathBuf;
use std::time::Instant;

pub use config::{Experiment, RepulsionPath, RunConfig, StatFunction};
pub use error::{CliError, Result};
pub use experiments::run_experiment;
pub use output::{verify_outputs, Check, Manifest, Outcome};

/// Result of [`run`]: the outcome and where the manifest was written.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: Outcome,
    pub summary: String,
    pub manifest: PathBuf,
}

/// Runs the configured experiment on `workers` threads and writes every
/// artifact to `config.out`.
pub fn run(config: &RunConfig, workers: usize) -> Result<RunResult> {
    let start = Instant::now();
    let outcome = run_experiment(config, workers)?;
    let summary = outcome.summary_json(config)?;
    let manifest = output::write_outputs(config, &outcome, workers, start.elapsed().as_secs_f64())?;
    Ok(RunResult {
        outcome,
        summary,
        manifest,
    })
}

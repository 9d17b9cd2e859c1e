//! Run configuration: a JSON document whose fields can be overridden from
//! the command line.

use std::path::{Path, PathBuf};

use dbmlab_core::dynamics::DtPolicy;
use dbmlab_core::ensembles::EnsembleKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Experiment selected on the command line or in the config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Semicircle,
    Rigidity,
    KernelCheck,
    Homogenization,
    Decay,
    Regularity,
    Gaps,
    Repulsion,
    Clt,
    Loop,
    Universality,
}

impl Experiment {
    /// Every experiment, in command-line order.
    pub const ALL: [Experiment; 11] = [
        Experiment::Semicircle,
        Experiment::Rigidity,
        Experiment::KernelCheck,
        Experiment::Homogenization,
        Experiment::Decay,
        Experiment::Regularity,
        Experiment::Gaps,
        Experiment::Repulsion,
        Experiment::Clt,
        Experiment::Loop,
        Experiment::Universality,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Semicircle => "semicircle",
            Experiment::Rigidity => "rigidity",
            Experiment::KernelCheck => "kernel-check",
            Experiment::Homogenization => "homogenization",
            Experiment::Decay => "decay",
            Experiment::Regularity => "regularity",
            Experiment::Gaps => "gaps",
            Experiment::Repulsion => "repulsion",
            Experiment::Clt => "clt",
            Experiment::Loop => "loop",
            Experiment::Universality => "universality",
        }
    }
}

/// Test function of the `clt` experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatFunction {
    /// `f(x) = x`.
    X,
    /// `f(x) = x^2`.
    X2,
    /// Antiderivative `P_t` of the kernel at `t = N^{-tau}` anchored at `E`.
    Antiderivative,
}

/// Sampler behind the `repulsion` experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepulsionPath {
    /// Exact eigenvalues of fresh ensemble draws.
    Exact,
    /// Ensemble draws evolved by the explicit DBM scheme to `t = N^{-tau}`.
    Dbm,
}

/// Full configuration of a run. Unset fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub n_samples: usize,
    /// Mesoscopic time `t = N^{-tau}`.
    pub tau: f64,
    #[serde(alias = "E")]
    pub energy: f64,
    pub seed: u64,
    pub dt: DtPolicy,
    pub out: PathBuf,
    pub ensemble: EnsembleKind,
    /// Rigidity exponent.
    pub xi: f64,
    /// Bulk fraction: indices in `[alpha N, (1 - alpha) N]`.
    pub alpha: f64,
    pub beta: f64,
    pub functions: Vec<StatFunction>,
    pub lambdas: Vec<f64>,
    /// `Im z` of the loop equation, `z = E + i eta`.
    pub eta: f64,
    /// Fourier cutoff radius of the universality observable.
    pub cutoff_m: f64,
    pub repulsion_path: RepulsionPath,
    pub eps_grid: Vec<f64>,
    /// Exponent at which regularity is declared.
    pub rho: f64,
    /// Write binary trajectory frames where the experiment has them.
    pub frames: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Semicircle,
            n: 200,
            n_samples: 20,
            tau: 0.2,
            energy: 0.2,
            seed: 0,
            dt: DtPolicy::Microscopic { c: 0.05 },
            out: PathBuf::from("out"),
            ensemble: EnsembleKind::Goe,
            xi: 0.3,
            alpha: 0.2,
            beta: 1.0,
            functions: vec![StatFunction::X],
            lambdas: vec![0.5, 1.0],
            eta: 0.1,
            cutoff_m: 2.0,
            repulsion_path: RepulsionPath::Exact,
            eps_grid: (0..=20)
                .map(|k| 0.05 * 10f64.powf(k as f64 / 20.0))
                .collect(),
            rho: 0.5,
            frames: false,
        }
    }
}

impl RunConfig {
    /// Defaults for `experiment`.
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            ..Self::default()
        }
    }

    /// Reads a JSON config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// `t = N^{-tau}`.
    pub fn t(&self) -> f64 {
        (self.n as f64).powf(-self.tau)
    }

    /// Checks every field, reporting all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n < 2 {
            problems.push(format!("n: must be >= 2, got {}", self.n));
        }
        if self.n_samples < 1 {
            problems.push("n_samples: must be >= 1".to_string());
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            problems.push(format!("tau: must lie in (0, 1], got {}", self.tau));
        }
        if !(self.energy.abs() < 2.0) {
            problems.push(format!("energy: |E| must be < 2, got {}", self.energy));
        }
        if let Err(e) = self.dt.dt(self.n.max(2)) {
            problems.push(format!("dt: {e}"));
        }
        if self.ensemble == EnsembleKind::Custom {
            problems.push("ensemble: custom ensembles cannot be configured from JSON".to_string());
        }
        if !(self.xi > 0.0) {
            problems.push(format!("xi: must be positive, got {}", self.xi));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            problems.push(format!("alpha: must lie in (0, 1/2), got {}", self.alpha));
        }
        if !(self.beta > 0.0) {
            problems.push(format!("beta: must be positive, got {}", self.beta));
        }
        if self.experiment == Experiment::Clt && self.functions.is_empty() {
            problems.push("functions: clt needs at least one function".to_string());
        }
        if self.lambdas.iter().any(|l| !l.is_finite()) {
            problems.push("lambdas: must be finite".to_string());
        }
        if !(self.eta > 0.0) {
            problems.push(format!("eta: must be positive, got {}", self.eta));
        }
        if !(self.cutoff_m > 0.0) {
            problems.push(format!("cutoff_m: must be positive, got {}", self.cutoff_m));
        }
        if self.eps_grid.iter().any(|e| !(*e > 0.0)) {
            problems.push("eps_grid: entries must be positive".to_string());
        }
        if !self.rho.is_finite() {
            problems.push("rho: must be finite".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!(
                "invalid configuration:\n  {}",
                problems.join("\n  ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_defaults() {
        let c = RunConfig::new(Experiment::Loop);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
        let partial: RunConfig =
            serde_json::from_str(r#"{"experiment": "kernel-check", "E": 0.5}"#).unwrap();
        assert_eq!(partial.experiment, Experiment::KernelCheck);
        assert_eq!(partial.energy, 0.5);
        assert_eq!(partial.n, 200);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn validation_lists_every_problem() {
        let c = RunConfig {
            n: 1,
            tau: 0.0,
            energy: 3.0,
            ..RunConfig::default()
        };
        let msg = c.validate().unwrap_err().to_string();
        assert!(
            msg.contains("n:") && msg.contains("tau:") && msg.contains("energy:"),
            "{msg}"
        );
        assert!(RunConfig::default().validate().is_ok());
    }
}

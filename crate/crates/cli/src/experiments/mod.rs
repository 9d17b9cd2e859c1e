//! The experiments behind each subcommand. Each returns an [`Outcome`]
//! that depends only on the config, never on the number of workers.

mod clt;
mod dynamic;
mod spectral;

use std::fmt::Write as _;

use dbmlab_core::ensembles::{
    eigenvalues, matrix_flow, sample_generalized_wigner, EnsembleKind, EnsembleSpec, Spectrum,
};
use dbmlab_core::rng::{stream, stream_id};
use dbmlab_core::stats::pairwise_sum;

use crate::config::{Experiment, RunConfig};
use crate::error::{CliError, Result};
use crate::output::Outcome;

/// Stream role of ensemble draws.
pub const ROLE_SAMPLE: u16 = 20;
/// Stream role of the matrix flow applied to ensemble draws.
pub const ROLE_SAMPLE_FLOW: u16 = 21;
/// Stream role of eigenvalue DBM noise.
pub const ROLE_DBM: u16 = 22;
/// Stream role of random data in deterministic experiments.
pub const ROLE_DATA: u16 = 23;

/// Mean KS ceiling of `semicircle`.
pub const KS_CEILING: f64 = 0.02;
/// Largest fraction of samples with a rigidity violation.
pub const RIGIDITY_RATE: f64 = 0.05;
/// Ceiling for the kernel bound constants.
pub const KERNEL_CONSTANT_CEILING: f64 = 100.0;
/// Closed form versus series on the bulk grid.
pub const KERNEL_SERIES_TOL: f64 = 1e-9;
/// Quadrature `K P_n` versus `(n/2) P_n`.
pub const EIGENRELATION_TOL: f64 = 1e-3;
/// `int p_t(x, y) drho(y) = 1`.
pub const STATIONARITY_TOL: f64 = 1e-8;
/// Ceiling for the median homogenization residual.
pub const HOMOGENIZATION_CEILING: f64 = 0.5;
/// Ceiling for the decay constant.
pub const DECAY_CEILING: f64 = 50.0;
/// Minimum fraction of regular replicas.
pub const REGULAR_FRACTION: f64 = 0.9;
/// Ceiling for the median Hölder oscillation.
pub const HOLDER_CEILING: f64 = 0.5;
/// Allowed deviation of the mean normalized gap from 1.
pub const GAP_MEAN_TOL: f64 = 0.02;
/// Admissible repulsion exponents.
pub const REPULSION_SLOPE: (f64, f64) = (1.7, 2.3);
/// Standard-error multiple for Monte Carlo checks.
pub const SE_MULTIPLE: f64 = 3.0;
/// Largest `|Z(lambda) - exp(-lambda^2 sigma2/2 + i lambda delta)|`.
pub const CHARACTERISTIC_TOL: f64 = 0.07;

/// Runs the configured experiment on `workers` threads without writing files.
pub fn run_experiment(config: &RunConfig, workers: usize) -> Result<Outcome> {
    config.validate()?;
    match config.experiment {
        Experiment::Semicircle => spectral::semicircle(config, workers),
        Experiment::Rigidity => spectral::rigidity(config, workers),
        Experiment::KernelCheck => spectral::kernel_check(config),
        Experiment::Homogenization => dynamic::homogenization(config, workers),
        Experiment::Decay => dynamic::decay(config, workers),
        Experiment::Regularity => dynamic::regularity(config, workers),
        Experiment::Gaps => spectral::gaps(config, workers),
        Experiment::Repulsion => spectral::repulsion(config, workers),
        Experiment::Clt => clt::clt(config, workers),
        Experiment::Loop => spectral::loop_equation(config, workers),
        Experiment::Universality => spectral::universality(config, workers),
    }
}

pub(crate) fn ensemble_spec(kind: EnsembleKind, n: usize) -> Result<EnsembleSpec> {
    match kind {
        EnsembleKind::Goe => Ok(EnsembleSpec::goe(n)),
        EnsembleKind::Bernoulli => Ok(EnsembleSpec::bernoulli(n)),
        EnsembleKind::Custom => Err(CliError::Usage(
            "ensemble: custom ensembles are not configurable".into(),
        )),
    }
}

/// Replica `k` of the configured ensemble, pushed along the matrix flow for
/// `flow_time` when positive.
pub(crate) fn sample(spec: &EnsembleSpec, flow_time: f64, seed: u64, k: u64) -> Result<Spectrum> {
    let h = sample_generalized_wigner(spec, &mut stream(seed, stream_id(ROLE_SAMPLE, k)))?;
    let h = if flow_time > 0.0 {
        matrix_flow(
            &h,
            flow_time,
            &mut stream(seed, stream_id(ROLE_SAMPLE_FLOW, k)),
        )?
    } else {
        h
    };
    Ok(eigenvalues(&h)?)
}

/// Mean and standard error with pairwise summation.
pub(crate) fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0) / n).sqrt())
}

pub(crate) fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

/// CSV with a header and one line per row; fields joined by commas.
pub(crate) fn csv<R: AsRef<[String]>>(header: &str, rows: &[R]) -> String {
    let mut s = String::with_capacity(32 * (rows.len() + 1));
    s.push_str(header);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.as_ref().join(","));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let (m, se) = mean_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
        assert_eq!(
            csv("a,b", &[vec!["1".to_string(), "2".to_string()]]),
            "a,b\n1,2\n"
        );
    }
}

//! Ensemble comparisons: entry moment matching and fixed-energy local
//! statistics.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::local::{q_sum, Observable2D};
use super::mean_and_stderr;
use crate::ensembles::{eigenvalues, matrix_flow, sample_generalized_wigner, EnsembleSpec};
use crate::error::{domain, Result};
use crate::rng::{seeded, stream, stream_id};

/// Bootstrap resamples in [`moment_match_check`].
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Comparison of moment order `a` between two entry samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub order: u32,
    /// `E v^a - E w^a` for the standardized samples.
    pub difference: f64,
    pub stderr: f64,
    /// `N^{-a/2} |difference|`, the difference for entries of size `N^{-1/2}`.
    pub scaled: f64,
    /// `N^{-delta - 2 + a/2}`.
    pub threshold: f64,
    pub within_threshold: bool,
}

/// Moment comparison for orders 1 to 4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub rows: Vec<MomentRow>,
}

fn raw_moment(v: &[f64], a: u32) -> f64 {
    v.iter().map(|x| x.powi(a as i32)).sum::<f64>() / v.len() as f64
}

/// Compares the first four moments of two samples of standardized entries
/// against `|E v^a - E w^a| <= N^{-delta-2+a/2}` for entries scaled by
/// `N^{-1/2}`. Standard errors come from a bootstrap seeded by `seed`.
pub fn moment_match_check(
    a: &[f64],
    b: &[f64],
    delta: f64,
    n: usize,
    seed: u64,
) -> Result<MomentReport> {
    if a.is_empty() || b.is_empty() {
        return domain("moment comparison needs nonempty samples");
    }
    if n == 0 {
        return domain("N must be positive");
    }
    let mut rng = seeded(seed);
    let mut boot = (0..4)
        .map(|_| Vec::with_capacity(BOOTSTRAP_RESAMPLES))
        .collect::<Vec<Vec<f64>>>();
    let mut ra = vec![0.0; a.len()];
    let mut rb = vec![0.0; b.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for r in ra.iter_mut() {
            *r = a[rng.random_range(0..a.len())];
        }
        for r in rb.iter_mut() {
            *r = b[rng.random_range(0..b.len())];
        }
        for (k, store) in boot.iter_mut().enumerate() {
            store.push(raw_moment(&ra, k as u32 + 1) - raw_moment(&rb, k as u32 + 1));
        }
    }
    let nf = n as f64;
    let rows = (1..=4u32)
        .map(|order| {
            let difference = raw_moment(a, order) - raw_moment(b, order);
            let s = &boot[order as usize - 1];
            let m = s.iter().sum::<f64>() / s.len() as f64;
            let stderr =
                (s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64).sqrt();
            let scaled = nf.powf(-(order as f64) / 2.0) * difference.abs();
            let threshold = nf.powf(-delta - 2.0 + order as f64 / 2.0);
            MomentRow {
                order,
                difference,
                stderr,
                scaled,
                threshold,
                within_threshold: scaled <= threshold,
            }
        })
        .collect();
    Ok(MomentReport { rows })
}

/// Two-sample comparison of `E Q` between ensembles A and B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityReport {
    pub mean_a: f64,
    pub mean_b: f64,
    pub stderr_a: f64,
    pub stderr_b: f64,
    pub pooled_stderr: f64,
    pub z_score: f64,
    pub samples: usize,
}

/// Stream role of ensemble A matrices in [`universality_sample`].
pub const ROLE_A: u16 = 10;
/// Stream role of the flow noise applied to ensemble A.
pub const ROLE_A_FLOW: u16 = 11;
/// Stream role of ensemble B matrices.
pub const ROLE_B: u16 = 12;

/// One draw of `Q(x, E)` for a matrix of `spec` evolved to time `t` by the
/// matrix flow, on the streams of `role`/`role_flow` and replica `k`.
pub fn universality_sample(
    spec: &EnsembleSpec,
    t: f64,
    energy: f64,
    q: &Observable2D,
    seed: u64,
    roles: (u16, u16),
    k: u64,
) -> Result<f64> {
    let h = sample_generalized_wigner(spec, &mut stream(seed, stream_id(roles.0, k)))?;
    let h = if t > 0.0 {
        matrix_flow(&h, t, &mut stream(seed, stream_id(roles.1, k)))?
    } else {
        h
    };
    Ok(q_sum(&eigenvalues(&h)?, energy, q))
}

/// Two-sample comparison of `E Q(x, E)`: `spec_a` evolved to time `t`
/// against raw `spec_b`.
#[allow(clippy::too_many_arguments)]
pub fn universality_compare(
    spec_a: &EnsembleSpec,
    spec_b: &EnsembleSpec,
    energy: f64,
    t: f64,
    q: &Observable2D,
    n_samples: usize,
    seed: u64,
) -> Result<UniversalityReport> {
    if !(energy.abs() < 2.0) {
        return domain(format!("energy {energy} outside the bulk"));
    }
    if !(t >= 0.0) {
        return domain(format!("flow time must be nonnegative, got {t}"));
    }
    if n_samples < 2 {
        return domain("universality comparison needs at least two samples");
    }
    let a: Vec<f64> = (0..n_samples as u64)
        .map(|k| universality_sample(spec_a, t, energy, q, seed, (ROLE_A, ROLE_A_FLOW), k))
        .collect::<Result<_>>()?;
    let b: Vec<f64> = (0..n_samples as u64)
        .map(|k| universality_sample(spec_b, 0.0, energy, q, seed, (ROLE_B, ROLE_B), k))
        .collect::<Result<_>>()?;
    Ok(two_sample(&a, &b))
}

/// Two-sample z-score of the means.
pub fn two_sample(a: &[f64], b: &[f64]) -> UniversalityReport {
    let (mean_a, stderr_a) = mean_and_stderr(a);
    let (mean_b, stderr_b) = mean_and_stderr(b);
    let pooled = stderr_a.hypot(stderr_b);
    let z_score = if pooled > 0.0 {
        (mean_a - mean_b) / pooled
    } else {
        0.0
    };
    UniversalityReport {
        mean_a,
        mean_b,
        stderr_a,
        stderr_b,
        pooled_stderr: pooled,
        z_score,
        samples: a.len().min(b.len()),
    }
}

//! Empirical eigenvalue statistics.
//!
//! ```text
//! S_N(f)  = sum_k f(x_k) - N int f drho
//! Q(x, E) = sum_{i,j} Q(N(x_i - E), N(x_j - x_i))
//! ```

mod compare;
mod linear;
mod local;

pub use compare::*;
pub use linear::*;
pub use local::*;

/// Sum by recursive halving, independent of how the input was produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sample mean and its standard error `sqrt(s^2 / n)`.
pub fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(v) / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0) / n).sqrt())
}

/// Unbiased sample variance.
pub fn sample_variance(v: &[f64]) -> f64 {
    let (mean, _) = mean_and_stderr(v);
    let dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
    pairwise_sum(&dev) / (v.len() as f64 - 1.0)
}

/// Wilson score interval for `k` successes out of `n` at normal quantile `z`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

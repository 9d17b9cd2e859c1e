//! The semicircle law `rho(x) = sqrt(4 - x^2) / (2 pi)` on `[-2, 2]`, its
//! quantiles, Stieltjes transform and rigidity diagnostics.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::ensembles::Spectrum;
use crate::error::{domain, Result};

/// Bisection tolerance for quantiles before the Newton polish.
pub const QUANTILE_BISECTION_TOL: f64 = 1e-12;

/// Semicircle density `rho(x) = sqrt(4 - x^2) / (2 pi)` on `[-2, 2]`.
pub fn density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

/// `F(x) = 1/2 + x sqrt(4 - x^2) / (4 pi) + arcsin(x/2) / pi`.
pub fn cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (0.5 * x).asin() / PI
    }
}

/// Solves `F(x) = q` by bisection followed by two Newton steps.
pub fn quantile(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return domain(format!("quantile level {q} outside [0, 1]"));
    }
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    while hi - lo > QUANTILE_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..2 {
        let d = density(x);
        if d > 1e-3 {
            let next = x - (cdf(x) - q) / d;
            if next.abs() < 2.0 {
                x = next;
            }
        }
    }
    Ok(x)
}

/// Typical eigenvalue locations `gamma_1 < ... < gamma_N`.
///
/// Stored zero-based: `gamma[k]` is the `(k + 1/2)/N` quantile, so the
/// semicircle mass below `gamma[0]` and above `gamma[N-1]` is `1/(2N)` each,
/// and `gamma[k] = -gamma[N-1-k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileTable {
    pub n: usize,
    pub gamma: Vec<f64>,
}

impl QuantileTable {
    pub fn new(n: usize) -> Result<Self> {
        if n < 1 {
            return domain("typical locations need N >= 1");
        }
        let mut gamma = Vec::with_capacity(n);
        for k in 0..n {
            let q = (k as f64 + 0.5) / n as f64;
            gamma.push(quantile(q)?);
        }
        // Enforce exact reflection symmetry.
        for k in 0..n / 2 {
            let s = 0.5 * (gamma[n - 1 - k] - gamma[k]);
            gamma[k] = -s;
            gamma[n - 1 - k] = s;
        }
        if n % 2 == 1 {
            gamma[n / 2] = 0.0;
        }
        Ok(Self { n, gamma })
    }

    /// Gap scale `min(gamma_{k+1} - gamma_k, gamma_k - gamma_{k-1})` with
    /// missing neighbours treated as infinitely far.
    pub fn local_gap(&self, k: usize) -> f64 {
        let left = if k > 0 {
            self.gamma[k] - self.gamma[k - 1]
        } else {
            f64::INFINITY
        };
        let right = if k + 1 < self.n {
            self.gamma[k + 1] - self.gamma[k]
        } else {
            f64::INFINITY
        };
        left.min(right)
    }

    /// Indices `k` with `|gamma_k - e| <= radius`.
    pub fn indices_near(&self, e: f64, radius: f64) -> Vec<usize> {
        (0..self.n)
            .filter(|&k| (self.gamma[k] - e).abs() <= radius)
            .collect()
    }

    /// Smallest index with `gamma_k >= e`, if any.
    pub fn first_at_or_above(&self, e: f64) -> Option<usize> {
        let k = self.gamma.partition_point(|&g| g < e);
        (k < self.n).then_some(k)
    }

    /// Zero-based bulk range `ceil(alpha N) ..= floor((1 - alpha) N)` in
    /// one-based labels, clipped to valid indices.
    pub fn bulk_range(&self, alpha: f64) -> std::ops::RangeInclusive<usize> {
        let n = self.n as f64;
        let lo = ((alpha * n).ceil() as usize).max(1);
        let hi = (((1.0 - alpha) * n).floor() as usize).min(self.n);
        (lo - 1)..=(hi.max(lo) - 1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,gamma\n");
        for (k, g) in self.gamma.iter().enumerate() {
            s.push_str(&format!("{},{:.17e}\n", k + 1, g));
        }
        s
    }
}

/// Stieltjes transform `m(z) = (z - sqrt(z - 2) sqrt(z + 2)) / 2`.
///
/// Uses principal square roots; the product is the branch of
/// `sqrt(z^2 - 4)` asymptotic to `z`, so `m(z) ~ 1/z` at infinity.
pub fn stieltjes(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return domain("non-finite spectral parameter");
    }
    if z.im == 0.0 && z.re.abs() <= 2.0 {
        return domain(format!("z = {z} lies on the support [-2, 2]"));
    }
    let root = sqrt_z2_minus_4(z);
    let mut m = 0.5 * (z - root);
    if m.norm() > 1.0 {
        m = 0.5 * (z + root);
    }
    Ok(m)
}

/// Branch of `sqrt(z^2 - 4)` asymptotic to `z`.
pub fn sqrt_z2_minus_4(z: Complex64) -> Complex64 {
    (z - 2.0).sqrt() * (z + 2.0).sqrt()
}

/// `m'(z) = -m(z) / sqrt(z^2 - 4)`.
pub fn stieltjes_derivative(z: Complex64) -> Result<Complex64> {
    let m = stieltjes(z)?;
    Ok(-m / sqrt_z2_minus_4(z))
}

/// Per-sample rigidity diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct RigidityReport {
    /// Zero-based indices exceeding the threshold.
    pub violations: Vec<usize>,
    /// `max_i |x_i - gamma_i| N^{2/3} i_hat^{1/3}`.
    pub max_scaled_dev: f64,
    pub xi: f64,
}

impl RigidityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Flags indices with `|x_i - gamma_i| > N^{-2/3 + xi} i_hat^{-1/3}`,
/// `i_hat = min(i, N + 1 - i)` in one-based labels.
pub fn rigidity_report(s: &Spectrum, table: &QuantileTable, xi: f64) -> Result<RigidityReport> {
    if s.n() != table.n {
        return domain(format!(
            "spectrum has {} values but the table has {}",
            s.n(),
            table.n
        ));
    }
    let n = table.n as f64;
    let thresh = n.powf(-2.0 / 3.0 + xi);
    let mut violations = Vec::new();
    let mut max_scaled = 0.0f64;
    for (k, (&x, &g)) in s.values.iter().zip(&table.gamma).enumerate() {
        let i_hat = (k + 1).min(table.n - k) as f64;
        let dev = (x - g).abs();
        if dev > thresh * i_hat.powf(-1.0 / 3.0) {
            violations.push(k);
        }
        max_scaled = max_scaled.max(dev * n.powf(2.0 / 3.0) * i_hat.powf(1.0 / 3.0));
    }
    Ok(RigidityReport {
        violations,
        max_scaled_dev: max_scaled,
        xi,
    })
}

/// Kolmogorov-Smirnov distance between the empirical law of `values`
/// (any order) and the semicircle law.
pub fn ks_distance(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_endpoints_and_midpoint() {
        assert_eq!(cdf(-2.0), 0.0);
        assert_eq!(cdf(2.0), 1.0);
        assert!((cdf(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn median_location_for_odd_n() {
        let t = QuantileTable::new(5).unwrap();
        assert_eq!(t.gamma[2], 0.0);
        for k in 0..5 {
            assert_eq!(t.gamma[k], -t.gamma[4 - k]);
        }
    }

    #[test]
    fn stieltjes_on_support_is_rejected() {
        assert!(stieltjes(Complex64::new(1.0, 0.0)).is_err());
        assert!(stieltjes(Complex64::new(2.0, 0.0)).is_err());
        assert!(stieltjes(Complex64::new(2.5, 0.0)).is_ok());
    }

    #[test]
    fn bulk_range_is_one_based_inclusive() {
        let t = QuantileTable::new(10).unwrap();
        assert_eq!(t.bulk_range(0.1), 0..=8);
        assert_eq!(t.bulk_range(0.25), 2..=6);
    }
}

//! Linear eigenvalue statistics, their Gaussian fluctuation parameters and
//! the loop equation.

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::pairwise_sum;
use crate::ensembles::Spectrum;
use crate::error::{config, domain, Result};
use crate::func::TestFunction;
use crate::quad::{adaptive_simpson, SemicircleRule};
use crate::rng::seeded;
use crate::semicircle::{sqrt_z2_minus_4, stieltjes, stieltjes_derivative};

/// Semicircle quadrature nodes for the centering integral.
pub const CENTERING_NODES: usize = 4000;

/// Midpoint nodes per angle in the variance double integral.
pub const VARIANCE_NODES: usize = 2000;

/// Points on which derivative sup-norms are sampled.
pub const SUP_GRID: usize = 20001;

/// Relative tolerance of the derivative spot check.
pub const DERIVATIVE_CHECK_TOL: f64 = 1e-5;

/// `f` with cached centering integral and derivative sup-norms.
#[derive(Debug, Clone)]
pub struct LinearStatistic {
    pub f: TestFunction,
    /// Interval carrying `f''` for `eps(f)`; `[-2, 2]` unless `f` has a support.
    pub support: (f64, f64),
    pub d1_sup: f64,
    pub d2_sup: f64,
    anchor: f64,
    centering: f64,
}

impl LinearStatistic {
    /// Caches `int f drho` and checks `f'` against central differences at
    /// 10 pseudo-random points of `(-2, 2)`.
    pub fn new(f: TestFunction) -> Result<Self> {
        let support = f.support.unwrap_or((-2.0, 2.0));
        let (a, b) = support;
        let mut d1_sup: f64 = 0.0;
        let mut d2_sup: f64 = 0.0;
        for k in 0..SUP_GRID {
            let x = a + (b - a) * k as f64 / (SUP_GRID - 1) as f64;
            d1_sup = d1_sup.max(f.d1(x).abs());
            d2_sup = d2_sup.max(f.d2(x).abs());
        }
        let mut rng = seeded(0x5eed);
        let h = 1e-5;
        for _ in 0..10 {
            let x: f64 = rng.random_range(-1.99..1.99);
            let fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            let d = f.d1(x);
            let scale = d.abs().max(1e-3 * d1_sup).max(1e-12);
            if (fd - d).abs() > DERIVATIVE_CHECK_TOL * scale {
                return config(format!(
                    "derivative of {} inconsistent at x = {x}: {d} vs central difference {fd}",
                    f.label
                ));
            }
        }
        let anchor = f.value(0.0);
        let centering = SemicircleRule::new(CENTERING_NODES).integrate(|x| f.value(x) - anchor);
        Ok(Self {
            f,
            support,
            d1_sup,
            d2_sup,
            anchor,
            centering,
        })
    }

    /// `int f drho`.
    pub fn mean(&self) -> f64 {
        self.anchor + self.centering
    }
}

/// `S_N(f) = sum_k f(x_k) - N int f drho`, arranged so that constants give
/// exactly 0.
pub fn linear_statistic(s: &Spectrum, f: &LinearStatistic) -> f64 {
    let sum: f64 = s.values.iter().map(|&x| f.f.value(x) - f.anchor).sum();
    sum - s.n() as f64 * f.centering
}

/// Parameters of the Gaussian limit `Z(lambda) ~ exp(-lambda^2 sigma2/2 + i lambda delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltParameters {
    pub sigma2: f64,
    pub delta: f64,
    pub eps_f: f64,
}

/// ```text
/// sigma2 = (2 pi^2 beta)^{-1} iint ((f(x)-f(y))/(x-y))^2 (4-xy)/(sqrt(4-x^2) sqrt(4-y^2)) dx dy
/// delta  = (2/beta - 1) int f dnu,  nu = (delta_{-2} + delta_{2})/4 - ds/(2 pi sqrt(4-s^2))
/// eps_f  = (1 + int |f''| kappa^{-1/2})^2,  kappa(s) = max(N^{-2/3}, min|s -+ 2|)
/// ```
///
/// With `x = 2 cos(theta)`, `y = 2 cos(phi)` the variance becomes
/// `(2 pi^2 beta)^{-1} iint_{[0,pi]^2} q^2 (4 - 4 cos(theta) cos(phi))` and is
/// evaluated by the midpoint rule on a grid symmetric under `x -> -x`.
pub fn clt_parameters(f: &LinearStatistic, beta: f64, n: usize) -> Result<CltParameters> {
    if !(beta > 0.0) {
        return domain(format!("beta must be positive, got {beta}"));
    }
    if n == 0 {
        return domain("N must be positive");
    }
    let m = VARIANCE_NODES;
    let mut x = vec![0.0; m];
    for k in 0..m.div_ceil(2) {
        let v = 2.0 * ((k as f64 + 0.5) * std::f64::consts::PI / m as f64).cos();
        x[k] = v;
        x[m - 1 - k] = -v;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    let fv: Vec<f64> = x.iter().map(|&v| f.f.value(v)).collect();
    let dv: Vec<f64> = x.iter().map(|&v| f.f.d1(v)).collect();
    let mut acc = 0.0;
    for k in 0..m {
        acc += dv[k] * dv[k] * (4.0 - x[k] * x[k]);
        let mut row = 0.0;
        for l in (k + 1)..m {
            let dx = x[k] - x[l];
            let q = if dx.abs() > 1e-7 {
                (fv[k] - fv[l]) / dx
            } else {
                f.f.d1(0.5 * (x[k] + x[l]))
            };
            row += q * q * (4.0 - x[k] * x[l]);
        }
        acc += 2.0 * row;
    }
    let sigma2 = acc / (2.0 * beta * (m * m) as f64);
    let arcsine_mean = fv.iter().sum::<f64>() / m as f64;
    let nu = 0.25 * (f.f.value(2.0) + f.f.value(-2.0)) - 0.5 * arcsine_mean;
    let delta = (2.0 / beta - 1.0) * nu;
    let eps_f = epsilon_functional(f, n);
    Ok(CltParameters {
        sigma2,
        delta,
        eps_f,
    })
}

fn epsilon_functional(f: &LinearStatistic, n: usize) -> f64 {
    let floor = (n as f64).powf(-2.0 / 3.0);
    let kappa = |s: f64| ((s - 2.0).abs().min((s + 2.0).abs())).max(floor);
    let g = |s: f64| f.f.d2(s).abs() / kappa(s).sqrt();
    let (a, b) = f.support;
    let mut breaks = vec![a, b];
    for c in [
        -2.0 - floor,
        -2.0,
        -2.0 + floor,
        0.0,
        2.0 - floor,
        2.0,
        2.0 + floor,
    ] {
        if c > a && c < b {
            breaks.push(c);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let integral: f64 = breaks
        .windows(2)
        .map(|w| adaptive_simpson(&g, w[0], w[1], 1e-10))
        .sum();
    if integral.is_finite() {
        (1.0 + integral).powi(2)
    } else {
        f64::INFINITY
    }
}

/// `Z(lambda) = E exp(i lambda S_N)` estimated from samples of `S_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicPoint {
    pub lambda: f64,
    pub re: f64,
    pub im: f64,
    /// `sqrt((1 - |Z|^2)/n)`, the population form of `sqrt((Var cos + Var sin)/n)`.
    pub stderr: f64,
}

impl CharacteristicPoint {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Monte Carlo `Z(lambda)` for each `lambda`; needs at least 100 samples.
/// Negative `lambda` is computed as the conjugate of `|lambda|`, so the
/// estimate is exactly Hermitian.
pub fn characteristic_fn(values: &[f64], lambdas: &[f64]) -> Result<Vec<CharacteristicPoint>> {
    if values.len() < 100 {
        return domain(format!(
            "characteristic function needs >= 100 samples, got {}",
            values.len()
        ));
    }
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let a = lambda.abs();
            let cos: Vec<f64> = values.iter().map(|s| (a * s).cos()).collect();
            let sin: Vec<f64> = values.iter().map(|s| (a * s).sin()).collect();
            let count = values.len() as f64;
            let mc = pairwise_sum(&cos) / count;
            let ms = pairwise_sum(&sin) / count;
            let im = if lambda < 0.0 { -ms } else { ms };
            CharacteristicPoint {
                lambda,
                re: mc,
                im,
                stderr: ((1.0 - mc * mc - ms * ms).max(0.0) / count).sqrt(),
            }
        })
        .collect())
}

/// Loop equation residual at `lambda = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub re: f64,
    pub im: f64,
    /// Delta-method standard errors of the real and imaginary parts.
    pub se_re: f64,
    pub se_im: f64,
    pub samples: usize,
    /// Set when `Im z < 5/N`.
    pub warning: Option<String>,
}

impl LoopReport {
    pub fn residual(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn abs(&self) -> f64 {
        self.residual().norm()
    }

    /// Combined standard error `sqrt(se_re^2 + se_im^2)`.
    pub fn stderr(&self) -> f64 {
        self.se_re.hypot(self.se_im)
    }
}

/// ```text
/// (m_N - m)^2 - sqrt(z^2-4) (m_N - m) - N^{-1} (2/beta - 1) m' - Var s_N(z)
/// ```
///
/// with `m_N = E s_N(z)` and `Var s_N(z) = E s_N^2 - m_N^2` estimated from
/// the samples and `m`, `m'` the semicircle Stieltjes transform and its
/// derivative.
pub fn loop_equation_residual(samples: &[Spectrum], z: Complex64, beta: f64) -> Result<LoopReport> {
    if !(z.im > 0.0) {
        return domain(format!("loop equation needs Im z > 0, got {z}"));
    }
    if !(z.re.abs() < 2.0) {
        return domain(format!("loop equation needs |Re z| < 2, got {z}"));
    }
    if samples.len() < 2 {
        return domain("loop equation needs at least two samples");
    }
    let n = samples[0].n();
    if n == 0 || samples.iter().any(|s| s.n() != n) {
        return domain("samples must share a positive size");
    }
    let nf = n as f64;
    let s: Vec<Complex64> = samples
        .iter()
        .map(|sp| sp.values.iter().map(|&x| 1.0 / (z - x)).sum::<Complex64>() / nf)
        .collect();
    let count = s.len() as f64;
    let mean = |v: &[Complex64]| {
        let re: Vec<f64> = v.iter().map(|c| c.re).collect();
        let im: Vec<f64> = v.iter().map(|c| c.im).collect();
        Complex64::new(pairwise_sum(&re), pairwise_sum(&im)) / count
    };
    let s2: Vec<Complex64> = s.iter().map(|c| c * c).collect();
    let m_n = mean(&s);
    let m2 = mean(&s2);
    let var = m2 - m_n * m_n;
    let m = stieltjes(z)?;
    let dm = stieltjes_derivative(z)?;
    let b = sqrt_z2_minus_4(z);
    let x = m_n - m;
    let r = x * x - b * x - (2.0 / beta - 1.0) / nf * dm - var;
    let g1 = 2.0 * x - b + 2.0 * m_n;
    let infl: Vec<Complex64> = s
        .iter()
        .zip(&s2)
        .map(|(si, qi)| g1 * (si - m_n) - (qi - m2))
        .collect();
    let se = |part: fn(&Complex64) -> f64| {
        let ss: f64 = infl.iter().map(|c| part(c).powi(2)).sum();
        (ss / (count * (count - 1.0))).sqrt()
    };
    let warning = (z.im < 5.0 / nf).then(|| format!("Im z = {} is below 5/N = {}", z.im, 5.0 / nf));
    Ok(LoopReport {
        re: r.re,
        im: r.im,
        se_re: se(|c| c.re),
        se_im: se(|c| c.im),
        samples: samples.len(),
        warning,
    })
}

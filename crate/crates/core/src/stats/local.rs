//! Local eigenvalue statistics: two-point observables, counting, gaps and
//! level repulsion.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::wilson_interval;
use crate::ensembles::Spectrum;
use crate::error::{domain, Result};
use crate::quad::GaussLegendre;
use crate::semicircle::{density, QuantileTable};

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Binary = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    General(Binary),
    Separable { a: Scalar, b: Scalar },
}

/// A test function `Q(x, y)` of the rescaled position `x = N(x_i - E)` and
/// the rescaled distance `y = N(x_j - x_i)`, vanishing for `|y| > l`.
#[derive(Clone)]
pub struct Observable2D {
    repr: Repr,
    /// Radius of the Fourier support in the first variable; infinite when
    /// no band limit is known.
    pub fourier_m: f64,
    pub l: f64,
    /// Optional support radius in the first variable.
    pub x_radius: Option<f64>,
    pub label: String,
}

impl fmt::Debug for Observable2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable2D")
            .field("label", &self.label)
            .field("fourier_m", &self.fourier_m)
            .field("l", &self.l)
            .field("x_radius", &self.x_radius)
            .finish()
    }
}

impl Observable2D {
    pub fn new(
        label: impl Into<String>,
        l: f64,
        q: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            repr: Repr::General(Arc::new(q)),
            fourier_m: f64::INFINITY,
            l,
            x_radius: None,
            label: label.into(),
        }
    }

    /// `Q(x, y) = a(x) b(y)`.
    pub fn separable(
        label: impl Into<String>,
        l: f64,
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            repr: Repr::Separable {
                a: Arc::new(a),
                b: Arc::new(b),
            },
            fourier_m: f64::INFINITY,
            l,
            x_radius: None,
            label: label.into(),
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", 0.0, |_, _| 0.0)
    }

    pub fn with_x_radius(mut self, r: f64) -> Self {
        self.x_radius = Some(r);
        self
    }

    /// `Q(x, y)`, forced to 0 outside the declared supports.
    #[inline]
    pub fn get(&self, x: f64, y: f64) -> f64 {
        if y.abs() > self.l || self.x_radius.is_some_and(|r| x.abs() > r) {
            return 0.0;
        }
        match &self.repr {
            Repr::General(q) => q(x, y),
            Repr::Separable { a, b } => a(x) * b(y),
        }
    }
}

/// `sum_{i,j} Q(N(x_i - E), N(x_j - x_i))`, visiting only pairs inside the
/// supports of `Q`. Terms are added in the order of the full double loop.
pub fn q_sum(s: &Spectrum, energy: f64, q: &Observable2D) -> f64 {
    let x = &s.values;
    let nf = x.len() as f64;
    let mut acc = 0.0;
    let (i_lo, i_hi) = match q.x_radius {
        Some(r) => (
            x.partition_point(|&v| nf * (v - energy) < -r),
            x.partition_point(|&v| nf * (v - energy) <= r),
        ),
        None => (0, x.len()),
    };
    let mut j_lo = 0;
    for i in i_lo..i_hi {
        let u = nf * (x[i] - energy);
        while j_lo < x.len() && nf * (x[j_lo] - x[i]) < -q.l {
            j_lo += 1;
        }
        let mut j = j_lo;
        while j < x.len() {
            let y = nf * (x[j] - x[i]);
            if y > q.l {
                break;
            }
            acc += q.get(u, y);
            j += 1;
        }
    }
    acc
}

/// `|{(i, j) : |x_i - E| <= s1/N, |x_i - x_j| <= s2/N}|`.
pub fn counting(s: &Spectrum, energy: f64, s1: f64, s2: f64) -> Result<usize> {
    if !(s1 > 0.0 && s2 > 0.0) {
        return domain(format!("window sizes must be positive, got {s1}, {s2}"));
    }
    let x = &s.values;
    let nf = x.len() as f64;
    let (r1, r2) = (s1 / nf, s2 / nf);
    let mut count = 0;
    for &xi in x.iter().filter(|&&xi| (xi - energy).abs() <= r1) {
        let lo = x.partition_point(|&v| xi - v > r2);
        let hi = x.partition_point(|&v| v - xi <= r2);
        count += hi - lo;
    }
    Ok(count)
}

/// Cutoff profile `q` with `q = 1` on `[-1/2, 1/2]`, `q = 0` off `(-1, 1)`.
#[derive(Clone)]
pub struct CutoffProfile {
    q: Scalar,
}

impl fmt::Debug for CutoffProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CutoffProfile")
    }
}

impl CutoffProfile {
    pub fn new(q: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { q: Arc::new(q) }
    }

    /// Quintic smoothstep decay from 1 at `|p| = 1/2` to 0 at `|p| = 1`.
    pub fn smoothstep() -> Self {
        Self::new(|p: f64| {
            let a = p.abs();
            if a <= 0.5 {
                1.0
            } else if a >= 1.0 {
                0.0
            } else {
                let s = 2.0 * (1.0 - a);
                s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
            }
        })
    }

    pub fn eval(&self, p: f64) -> f64 {
        (self.q)(p)
    }
}

/// Grid for [`fourier_cutoff`]: the smoothing kernel and tabulated factors
/// live on `[-half_width, half_width]` with spacing `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierGrid {
    pub half_width: f64,
    pub step: f64,
}

impl Default for FourierGrid {
    fn default() -> Self {
        Self {
            half_width: 40.0,
            step: 0.01,
        }
    }
}

struct Smoother {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Smoother {
    /// `K_m(u) = (2 pi)^{-1} int q(p/m) e^{ipu} dp = (m/pi) int_0^1 q(r) cos(m r u) dr`
    /// on the grid, times the grid step.
    fn new(m: f64, profile: &CutoffProfile, grid: FourierGrid) -> Self {
        let gl = GaussLegendre::new(16);
        let panels: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
        let count = (grid.half_width / grid.step).round() as i64;
        let mut nodes = Vec::with_capacity(2 * count as usize + 1);
        let mut weights = Vec::with_capacity(2 * count as usize + 1);
        for k in -count..=count {
            let u = k as f64 * grid.step;
            let kern = m / std::f64::consts::PI
                * gl.integrate_pieces(|r| profile.eval(r) * (m * r * u).cos(), &panels);
            nodes.push(u);
            weights.push(kern * grid.step);
        }
        Self { nodes, weights }
    }

    fn convolve(&self, f: impl Fn(f64) -> f64, x: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(u, w)| f(x - u) * w)
            .sum()
    }
}

struct Table {
    x0: f64,
    step: f64,
    values: Vec<f64>,
}

impl Table {
    /// Cubic interpolation through four neighbouring samples.
    fn eval(&self, x: f64) -> Option<f64> {
        let t = (x - self.x0) / self.step;
        let k = t.floor() as i64;
        if k < 1 || k + 2 >= self.values.len() as i64 {
            return None;
        }
        let u = t - k as f64;
        let k = k as usize;
        let (p0, p1, p2, p3) = (
            self.values[k - 1],
            self.values[k],
            self.values[k + 1],
            self.values[k + 2],
        );
        Some(
            p1 + 0.5
                * u
                * (p2 - p0
                    + u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + u * (3.0 * (p1 - p2) + p3 - p0))),
        )
    }
}

/// `Q_m` with first-variable Fourier transform `Q^(p, y) q(p/m)`,
/// synthesized as the convolution of `Q(., y)` with
/// `K_m(u) = (2 pi)^{-1} int q(p/m) e^{ipu} dp` on `grid`. Separable
/// observables have their first factor tabulated.
pub fn fourier_cutoff(
    q: &Observable2D,
    m: f64,
    profile: &CutoffProfile,
    grid: FourierGrid,
) -> Result<Observable2D> {
    if !(m > 0.0 && m.is_finite()) {
        return domain(format!("cutoff radius must be positive, got {m}"));
    }
    if !(grid.step > 0.0 && grid.half_width > grid.step) {
        return domain("Fourier grid needs 0 < step < half_width");
    }
    let smoother = Arc::new(Smoother::new(m, profile, grid));
    let repr = match &q.repr {
        Repr::Separable { a, b } => {
            let count = (grid.half_width / grid.step).round() as i64;
            let values = (-count..=count)
                .map(|k| smoother.convolve(|v| a(v), k as f64 * grid.step))
                .collect();
            let table = Table {
                x0: -(count as f64) * grid.step,
                step: grid.step,
                values,
            };
            let a = a.clone();
            let sm = smoother.clone();
            Repr::Separable {
                a: Arc::new(move |x| table.eval(x).unwrap_or_else(|| sm.convolve(|v| a(v), x))),
                b: b.clone(),
            }
        }
        Repr::General(f) => {
            let f = f.clone();
            Repr::General(Arc::new(move |x, y| smoother.convolve(|v| f(v, y), x)))
        }
    };
    Ok(Observable2D {
        repr,
        fourier_m: m,
        l: q.l,
        x_radius: None,
        label: format!("{}_m{m}", q.label),
    })
}

/// `sup (1 + x^2) |Q_m(x, y) - Q(x, y)|` over the given points.
pub fn cutoff_error(q: &Observable2D, qm: &Observable2D, xs: &[f64], ys: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &x in xs {
        for &y in ys {
            worst = worst.max((1.0 + x * x) * (qm.get(x, y) - q.get(x, y)).abs());
        }
    }
    worst
}

/// Histogram of `N rho(gamma_i) (x_{i+1} - x_i)` over bulk indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapHistogram {
    pub bin_width: f64,
    /// Left bin edges.
    pub edges: Vec<f64>,
    /// Probability density per bin; `sum density * bin_width = 1`.
    pub density: Vec<f64>,
    pub count: usize,
    pub mean: f64,
    pub stderr: f64,
}

impl GapHistogram {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("left,right,density\n");
        for (e, d) in self.edges.iter().zip(&self.density) {
            s.push_str(&format!("{e},{},{d}\n", e + self.bin_width));
        }
        s
    }
}

/// Normalized bulk gaps `i` in `[ceil(alpha N), floor((1 - alpha) N)]`
/// (one-based), pooled over samples.
pub fn normalized_gaps(
    samples: &[Spectrum],
    table: &QuantileTable,
    bulk_alpha: f64,
) -> Result<Vec<f64>> {
    let n = table.n;
    if samples.iter().any(|s| s.n() != n) {
        return domain("sample size does not match the quantile table");
    }
    let range = table.bulk_range(bulk_alpha);
    let mut gaps = Vec::new();
    for s in samples {
        for i in range.clone().filter(|&i| i + 1 < n) {
            gaps.push(n as f64 * density(table.gamma[i]) * (s.values[i + 1] - s.values[i]));
        }
    }
    Ok(gaps)
}

/// Histogram of unfolded bulk gaps `N rho(gamma_i) (x_{i+1} - x_i)`.
pub fn gap_statistics(
    samples: &[Spectrum],
    table: &QuantileTable,
    bulk_alpha: f64,
    bin_width: f64,
) -> Result<GapHistogram> {
    if samples.is_empty() {
        return domain("gap statistics need at least one sample");
    }
    if !(bin_width > 0.0) {
        return domain(format!("bin width must be positive, got {bin_width}"));
    }
    let gaps = normalized_gaps(samples, table, bulk_alpha)?;
    if gaps.is_empty() {
        return domain("no bulk gaps");
    }
    let top = gaps.iter().cloned().fold(0.0, f64::max);
    let bins = ((top / bin_width).floor() as usize + 1).max(1);
    let mut counts = vec![0usize; bins];
    for &g in &gaps {
        let b = ((g / bin_width).floor().max(0.0) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let total = gaps.len() as f64;
    let (mean, stderr) = super::mean_and_stderr(&gaps);
    Ok(GapHistogram {
        bin_width,
        edges: (0..bins).map(|b| b as f64 * bin_width).collect(),
        density: counts
            .iter()
            .map(|&c| c as f64 / (total * bin_width))
            .collect(),
        count: gaps.len(),
        mean,
        stderr,
    })
}

/// Confidence level of the Wilson intervals.
pub const WILSON_Z: f64 = 1.96;

/// Minimum number of samples for the exponent fit.
pub const REPULSION_MIN_SAMPLES: usize = 1000;

/// Fitting window of the repulsion exponent.
pub const REPULSION_FIT_RANGE: (f64, f64) = (0.05, 0.5);

/// Empirical `P(gap <= eps/N)` with a Wilson interval `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepulsionPoint {
    pub eps: f64,
    pub count: usize,
    pub probability: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `P(x_{i+1} - x_i <= eps/N)` per `eps` with a weighted log-log fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepulsionReport {
    pub index: usize,
    pub samples: usize,
    pub points: Vec<RepulsionPoint>,
    /// Fitted exponent; `None` with fewer than [`REPULSION_MIN_SAMPLES`]
    /// samples or fewer than two usable points.
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    /// Grid values inside the fit window dropped for a zero count.
    pub excluded: Vec<f64>,
}

impl RepulsionReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,count,probability,lower,upper\n");
        for p in &self.points {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                p.eps, p.count, p.probability, p.lower, p.upper
            ));
        }
        s
    }
}

/// Counts gaps of the zero-based index pair `(i, i+1)` below `eps/N` and
/// fits `log P = a + slope log eps` over [`REPULSION_FIT_RANGE`] by least
/// squares weighted with the inverse binomial variance of `log P`.
pub fn level_repulsion_probe(
    samples: &[Spectrum],
    table: &QuantileTable,
    i: usize,
    eps_grid: &[f64],
) -> Result<RepulsionReport> {
    let n = table.n;
    if i + 1 >= n {
        return domain(format!("index {i} has no right neighbour for N = {n}"));
    }
    if samples.is_empty() || samples.iter().any(|s| s.n() != n) {
        return domain("samples must be nonempty and match the quantile table");
    }
    let gaps: Vec<f64> = samples
        .iter()
        .map(|s| n as f64 * (s.values[i + 1] - s.values[i]))
        .collect();
    let total = gaps.len();
    let mut points = Vec::new();
    for &eps in eps_grid {
        let count = gaps.iter().filter(|&&g| g <= eps).count();
        let (lower, upper) = wilson_interval(count, total, WILSON_Z);
        points.push(RepulsionPoint {
            eps,
            count,
            probability: count as f64 / total as f64,
            lower,
            upper,
        });
    }
    let (lo, hi) = REPULSION_FIT_RANGE;
    let in_range: Vec<&RepulsionPoint> = points
        .iter()
        .filter(|p| p.eps >= lo && p.eps <= hi)
        .collect();
    let excluded: Vec<f64> = in_range
        .iter()
        .filter(|p| p.count == 0)
        .map(|p| p.eps)
        .collect();
    let usable: Vec<&&RepulsionPoint> = in_range
        .iter()
        .filter(|p| p.count > 0 && p.count < total)
        .collect();
    let (mut slope, mut slope_stderr) = (None, None);
    if total >= REPULSION_MIN_SAMPLES && usable.len() >= 2 {
        let w: Vec<f64> = usable
            .iter()
            .map(|p| p.count as f64 / (1.0 - p.probability))
            .collect();
        let xs: Vec<f64> = usable.iter().map(|p| p.eps.ln()).collect();
        let ys: Vec<f64> = usable.iter().map(|p| p.probability.ln()).collect();
        let sw: f64 = w.iter().sum();
        let mx = w.iter().zip(&xs).map(|(a, b)| a * b).sum::<f64>() / sw;
        let my = w.iter().zip(&ys).map(|(a, b)| a * b).sum::<f64>() / sw;
        let sxx: f64 = w.iter().zip(&xs).map(|(a, x)| a * (x - mx).powi(2)).sum();
        let sxy: f64 = w
            .iter()
            .zip(xs.iter().zip(&ys))
            .map(|(a, (x, y))| a * (x - mx) * (y - my))
            .sum();
        if sxx > 0.0 {
            slope = Some(sxy / sxx);
            slope_stderr = Some(1.0 / sxx.sqrt());
        }
    }
    Ok(RepulsionReport {
        index: i,
        samples: total,
        points,
        slope,
        slope_stderr,
        excluded,
    })
}

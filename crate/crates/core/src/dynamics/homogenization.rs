//! Homogenization residuals, the regularity scan of a coefficient field and
//! the Hölder oscillation of a time series.

use serde::{Deserialize, Serialize};

use super::dbm::{
    run_coupled_with, AdaptiveHalving, DtPolicy, RunOptions, Scheme, TimeSeries, Trajectory,
};
use super::parabolic::{norm_inf, CoefficientField};
use crate::ensembles::{
    eigenvalues, matrix_flow, sample_generalized_wigner, sample_goe, EnsembleKind, EnsembleSpec,
    Spectrum,
};
use crate::error::{domain, Result};
use crate::kernel::PsiOperator;
use crate::rng::{stream, stream_id, Rng};
use crate::semicircle::QuantileTable;

/// Residuals `r_i` on `I(E, delta1) = {i : |gamma_i - E| <= N^{-1+delta1}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizationReport {
    pub indices: Vec<usize>,
    pub residuals: Vec<f64>,
    /// `None` when the index set is empty.
    pub max: Option<f64>,
}

/// ```text
/// r_i = | N x_i(t) - N (y_i(t) + (Psi_{t-t0} x(t0))_i - (Psi_{t-t0} y(t0))_i) |
/// ```
///
/// for `i` in `I(E, delta1)`. Both trajectories must hold records at the
/// absolute times `t0` and `t`.
#[allow(clippy::too_many_arguments)]
pub fn homogenization_residual(
    xt: &Trajectory,
    yt: &Trajectory,
    t0: f64,
    t: f64,
    energy: f64,
    delta1: f64,
    table: &QuantileTable,
) -> Result<HomogenizationReport> {
    let n = table.n;
    if xt.n() != n || yt.n() != n {
        return domain("trajectory size does not match the quantile table");
    }
    if !(t > t0 && t0 >= 0.0) {
        return domain(format!("need 0 <= t0 < t, got t0 = {t0}, t = {t}"));
    }
    if !(energy.abs() < 2.0) {
        return domain(format!("energy {energy} outside the bulk"));
    }
    let lookup = |tr: &Trajectory, s: f64| {
        tr.state_at(s)
            .cloned()
            .ok_or_else(|| crate::Error::Domain(format!("no record at time {s}")))
    };
    let (x0, y0) = (lookup(xt, t0)?, lookup(yt, t0)?);
    let (x1, y1) = (lookup(xt, t)?, lookup(yt, t)?);
    let radius = (n as f64).powf(-1.0 + delta1);
    let indices = table.indices_near(energy, radius);
    let psi = PsiOperator::new(t - t0, table)?;
    let diff: Vec<f64> = x0
        .values
        .iter()
        .zip(&y0.values)
        .map(|(a, b)| a - b)
        .collect();
    let pdiff = psi.apply(&diff)?;
    let nf = n as f64;
    let residuals: Vec<f64> = indices
        .iter()
        .map(|&i| (nf * x1.values[i] - nf * (y1.values[i] + pdiff[i])).abs())
        .collect();
    let max = residuals.iter().cloned().reduce(f64::max);
    Ok(HomogenizationReport {
        indices,
        residuals,
        max,
    })
}

/// A full homogenization sample: `x(t0)` from the matrix flow of a
/// generalized Wigner matrix, `y(t0)` from an independent GOE matrix, then
/// coupled DBM on `[t0, t]` with `t0 = N^{-tau0}/2` and `t = N^{-tau}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizationSetup {
    pub n: usize,
    pub kind: EnsembleKind,
    pub tau0: f64,
    pub tau: f64,
    pub energy: f64,
    pub delta1: f64,
    pub dt: DtPolicy,
    pub adaptive: Option<AdaptiveHalving>,
    pub scheme: Scheme,
}

impl HomogenizationSetup {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            kind: EnsembleKind::Bernoulli,
            tau0: 0.25,
            tau: 0.2,
            energy: 0.2,
            delta1: 0.5,
            dt: DtPolicy::default(),
            adaptive: None,
            scheme: Scheme::default(),
        }
    }

    pub fn t0(&self) -> f64 {
        0.5 * (self.n as f64).powf(-self.tau0)
    }

    pub fn t(&self) -> f64 {
        (self.n as f64).powf(-self.tau)
    }

    /// Runs replica `replica` of master seed `seed`.
    pub fn run(&self, seed: u64, replica: u64) -> Result<HomogenizationReport> {
        let (t0, t) = (self.t0(), self.t());
        if t < 2.0 * t0 {
            return domain(format!("need t >= 2 t0, got t0 = {t0}, t = {t}"));
        }
        let spec = match self.kind {
            EnsembleKind::Goe => EnsembleSpec::goe(self.n),
            EnsembleKind::Bernoulli => EnsembleSpec::bernoulli(self.n),
            EnsembleKind::Custom => return domain("custom ensembles need an explicit sampler"),
        };
        let mut r_h: Rng = stream(seed, stream_id(1, replica));
        let mut r_flow = stream(seed, stream_id(2, replica));
        let mut r_goe = stream(seed, stream_id(3, replica));
        let mut r_noise = stream(seed, stream_id(4, replica));
        let h = sample_generalized_wigner(&spec, &mut r_h)?;
        let x0 = eigenvalues(&matrix_flow(&h, t0, &mut r_flow)?)?;
        let y0 = eigenvalues(&sample_goe(self.n, &mut r_goe))?;
        let dt = self.dt.dt(self.n)?;
        let opts = RunOptions {
            dt,
            record_every: usize::MAX,
            adaptive: self.adaptive,
            scheme: self.scheme,
            origin: t0,
            seed: Some(seed),
        };
        let (xt, yt) = run_coupled_with(&x0, &y0, t - t0, &opts, &mut r_noise)?;
        let table = QuantileTable::new(self.n)?;
        homogenization_residual(&xt, &yt, t0, t, self.energy, self.delta1, &table)
    }
}

/// Relative offsets `Xi = {-2^{-m}(1 + 2^{-k}) : 0 <= k, m <= C log N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    pub offsets: Vec<f64>,
}

impl XiGrid {
    pub fn dyadic(n: usize, c: f64) -> Self {
        let top = (c * (n as f64).ln()).floor().max(0.0) as i32;
        let mut offsets = Vec::new();
        for m in 0..=top {
            for k in 0..=top {
                offsets.push(-(2f64).powi(-m) * (1.0 + (2f64).powi(-k)));
            }
        }
        Self { offsets }
    }
}

/// Outcome of [`regularity_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub n: usize,
    /// Largest value of the normalized block integral over the grid.
    pub worst_ratio: f64,
    /// Smallest `rho` with `worst_ratio <= N^{1+rho}`; `-inf` for a zero field.
    pub rho_min: f64,
    /// Space-time points actually scanned, i.e. `sigma Xi + sigma` inside `(0, sigma]`.
    pub points: usize,
}

impl RegularityReport {
    pub fn regular_at(&self, rho: f64) -> bool {
        self.worst_ratio <= (self.n as f64).powf(1.0 + rho)
    }
}

fn block_sums(field: &CoefficientField, z: usize, s: f64, radii: &[usize]) -> Vec<f64> {
    let n = field.n();
    radii
        .iter()
        .map(|&m| {
            let lo = z.saturating_sub(m);
            let hi = (z + m).min(n - 1);
            let mut acc = 0.0;
            for i in lo..=hi {
                for j in lo..=hi {
                    if i != j {
                        acc += field.get(i, j, s);
                    }
                }
            }
            acc / m as f64
        })
        .collect()
}

/// Scans
///
/// ```text
/// sup_{0 <= s <= sigma'} sup_M (1/N + |s - sigma'|)^{-1}
///     | int_s^sigma' M^{-1} sum_{|i-z|<=M} sum_{|j-z|<=M} B_ij(u) du |
/// ```
///
/// over `sigma'` in `sigma Xi + sigma` (positive points only) and dyadic
/// `M`. Coupled fields are integrated exactly as piecewise constant
/// functions; static ones in closed form.
pub fn regularity_check(
    field: &CoefficientField,
    z: usize,
    sigma: f64,
    grid: &XiGrid,
) -> Result<RegularityReport> {
    let n = field.n();
    if z >= n {
        return domain(format!("index {z} out of range for N = {n}"));
    }
    if !(sigma > 0.0) {
        return domain(format!("sigma must be positive, got {sigma}"));
    }
    let mut radii = Vec::new();
    let mut m = 1;
    while m < n {
        radii.push(m);
        m *= 2;
    }
    radii.push(n);
    let targets: Vec<f64> = grid
        .offsets
        .iter()
        .map(|x| sigma * x + sigma)
        .filter(|&s| s > 0.0)
        .collect();
    let inv_n = 1.0 / n as f64;
    let mut worst: f64 = 0.0;
    match field.breakpoints() {
        None => {
            let sums = block_sums(field, z, 0.0, &radii);
            let top = sums.iter().fold(0.0f64, |a, s| a.max(s.abs()));
            for &sp in &targets {
                worst = worst.max(sp / (inv_n + sp) * top);
            }
        }
        Some(bp) => {
            let mut knots: Vec<f64> = bp.into_iter().filter(|&s| s >= 0.0 && s < sigma).collect();
            if knots.first().is_none_or(|&s| s > 0.0) {
                knots.insert(0, 0.0);
            }
            knots.push(sigma);
            let values: Vec<Vec<f64>> = knots[..knots.len() - 1]
                .iter()
                .map(|&s| block_sums(field, z, s, &radii))
                .collect();
            let mut cum = vec![vec![0.0; radii.len()]];
            for (k, v) in values.iter().enumerate() {
                let h = knots[k + 1] - knots[k];
                let prev = cum[k].clone();
                cum.push(prev.iter().zip(v).map(|(c, b)| c + h * b).collect());
            }
            let integral_to = |s: f64, r: usize| {
                let k = knots
                    .partition_point(|&u| u <= s)
                    .saturating_sub(1)
                    .min(values.len() - 1);
                cum[k][r] + (s - knots[k]) * values[k][r]
            };
            for &sp in &targets {
                for &s in knots.iter().filter(|&&s| s < sp) {
                    for r in 0..radii.len() {
                        let v = (integral_to(sp, r) - integral_to(s, r)).abs() / (inv_n + sp - s);
                        worst = worst.max(v);
                    }
                }
            }
        }
    }
    let rho_min = if worst > 0.0 {
        worst.ln() / (n as f64).ln() - 1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(RegularityReport {
        n,
        worst_ratio: worst,
        rho_min,
        points: targets.len(),
    })
}

/// Outcome of [`holder_oscillation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    /// `None` when `Xi_z(l1)` or the time window is empty.
    pub oscillation: Option<f64>,
    pub indices: usize,
    pub times: usize,
}

/// `max |v_j(s) - v_k(s)| / ||v(s)||_inf` over recorded `s` in `[t - l1, t]`
/// and `j, k` with `|gamma_j - z|, |gamma_k - z| <= l1`.
pub fn holder_oscillation(
    series: &TimeSeries,
    z: f64,
    t: f64,
    ell1: f64,
    table: &QuantileTable,
) -> Result<HolderReport> {
    if !(ell1 > 0.0) {
        return domain(format!("window must be positive, got {ell1}"));
    }
    let idx = table.indices_near(z, ell1);
    let mut best: Option<f64> = None;
    let mut times = 0;
    let tol = 1e-12 * t.abs().max(1.0);
    for (s, v) in series.times.iter().zip(&series.values) {
        if *s < t - ell1 - tol || *s > t + tol {
            continue;
        }
        if v.len() != table.n {
            return domain("series vector size does not match the quantile table");
        }
        times += 1;
        if idx.is_empty() {
            continue;
        }
        let (lo, hi) = idx
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &i| {
                (a.min(v[i]), b.max(v[i]))
            });
        let sup = norm_inf(v);
        let osc = if sup > 0.0 { (hi - lo) / sup } else { 0.0 };
        best = Some(best.map_or(osc, |b| b.max(osc)));
    }
    Ok(HolderReport {
        oscillation: best,
        indices: idx.len(),
        times,
    })
}

/// The coupled pair on `[0, t]` with `x(0)` drawn from `kind` and `y(0)`
/// from an independent GOE matrix, recording every `record_every` steps.
pub fn coupled_from_ensembles(
    n: usize,
    kind: EnsembleKind,
    t: f64,
    dt: f64,
    record_every: usize,
    seed: u64,
    replica: u64,
) -> Result<(Trajectory, Trajectory)> {
    let spec = match kind {
        EnsembleKind::Goe => EnsembleSpec::goe(n),
        EnsembleKind::Bernoulli => EnsembleSpec::bernoulli(n),
        EnsembleKind::Custom => return domain("custom ensembles need an explicit sampler"),
    };
    let x0: Spectrum = eigenvalues(&sample_generalized_wigner(
        &spec,
        &mut stream(seed, stream_id(1, replica)),
    )?)?;
    let y0 = eigenvalues(&sample_goe(n, &mut stream(seed, stream_id(3, replica))))?;
    let opts = RunOptions {
        dt,
        record_every,
        adaptive: None,
        scheme: Scheme::default(),
        origin: 0.0,
        seed: Some(seed),
    };
    run_coupled_with(&x0, &y0, t, &opts, &mut stream(seed, stream_id(4, replica)))
}

//! The discrete parabolic equation `dv/dt = -B(t) v` with
//! `(B v)_i = sum_j B_ij (v_i - v_j)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::dbm::{regularization_sign, Trajectory};
use crate::error::{domain, ensure_finite, Error, Result};
use crate::semicircle::QuantileTable;

/// How a coefficient field was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldMode {
    Coupled,
    Synthetic,
    Frozen,
}

/// Coefficients `B_ij(s) = 1/(N (x_i - x_j + eps_ij)(y_i - y_j + eps_ij))`
/// read off a coupled pair of trajectories, piecewise constant between
/// records. `eps_ij` vanishes up to `onset`.
#[derive(Debug, Clone)]
pub struct CoupledField {
    pub x: Arc<Trajectory>,
    pub y: Arc<Trajectory>,
    pub onset: f64,
    pub eps: f64,
}

/// Symmetric nonnegative coefficients with zero diagonal.
#[derive(Debug, Clone)]
pub enum CoefficientField {
    /// Time independent `B_ij = 1/(N (gamma_i - gamma_j)^2)`.
    Synthetic {
        n: usize,
        weights: Arc<Vec<f64>>,
    },
    /// An arbitrary time independent matrix.
    Frozen {
        n: usize,
        weights: Arc<Vec<f64>>,
    },
    Coupled(CoupledField),
}

impl CoefficientField {
    /// Frozen field `B_ij = 1 / (N (gamma_i - gamma_j)^2)` at the typical locations.
    pub fn synthetic(table: &QuantileTable) -> Self {
        let n = table.n;
        let g = &table.gamma;
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = g[i] - g[j];
                let b = 1.0 / (n as f64 * d * d);
                w[i * n + j] = b;
                w[j * n + i] = b;
            }
        }
        CoefficientField::Synthetic {
            n,
            weights: Arc::new(w),
        }
    }

    /// A frozen field from a row-major matrix, checked for symmetry, zero
    /// diagonal and nonnegativity.
    pub fn frozen(n: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n * n {
            return domain(format!("{} weights for N = {n}", weights.len()));
        }
        ensure_finite(&weights, "coefficient field")?;
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return domain(format!("nonzero diagonal coefficient at {i}"));
            }
            for j in (i + 1)..n {
                let (a, b) = (weights[i * n + j], weights[j * n + i]);
                if a != b {
                    return domain(format!("asymmetric coefficients at ({i}, {j})"));
                }
                if a < 0.0 {
                    return domain(format!("negative coefficient at ({i}, {j})"));
                }
            }
        }
        Ok(CoefficientField::Frozen {
            n,
            weights: Arc::new(weights),
        })
    }

    pub fn zero(n: usize) -> Self {
        CoefficientField::Frozen {
            n,
            weights: Arc::new(vec![0.0; n * n]),
        }
    }

    /// The field of a coupled pair, regularized by `eps_ij = eps sign(i - j)`
    /// after `onset`.
    pub fn coupled(x: Arc<Trajectory>, y: Arc<Trajectory>, onset: f64, eps: f64) -> Result<Self> {
        if x.times != y.times || x.origin != y.origin || x.n() != y.n() {
            return domain("trajectories are not recorded on a common grid");
        }
        if !(eps >= 0.0) {
            return domain(format!("regularization must be nonnegative, got {eps}"));
        }
        Ok(CoefficientField::Coupled(CoupledField { x, y, onset, eps }))
    }

    pub fn n(&self) -> usize {
        match self {
            CoefficientField::Synthetic { n, .. } | CoefficientField::Frozen { n, .. } => *n,
            CoefficientField::Coupled(c) => c.x.n(),
        }
    }

    pub fn mode(&self) -> FieldMode {
        match self {
            CoefficientField::Synthetic { .. } => FieldMode::Synthetic,
            CoefficientField::Frozen { .. } => FieldMode::Frozen,
            CoefficientField::Coupled(_) => FieldMode::Coupled,
        }
    }

    pub fn is_static(&self) -> bool {
        !matches!(self, CoefficientField::Coupled(_))
    }

    /// `B_ij(s)`.
    pub fn get(&self, i: usize, j: usize, s: f64) -> f64 {
        match self {
            CoefficientField::Synthetic { n, weights }
            | CoefficientField::Frozen { n, weights } => weights[i * n + j],
            CoefficientField::Coupled(c) => {
                if i == j {
                    return 0.0;
                }
                let k = c.x.index_at_or_before(s);
                c.entry(k, i, j, s)
            }
        }
    }

    /// Writes the full matrix `B(s)` into `out`.
    pub fn fill(&self, s: f64, out: &mut Vec<f64>) {
        let n = self.n();
        match self {
            CoefficientField::Synthetic { weights, .. }
            | CoefficientField::Frozen { weights, .. } => {
                out.clear();
                out.extend_from_slice(weights);
            }
            CoefficientField::Coupled(c) => {
                out.clear();
                out.resize(n * n, 0.0);
                let k = c.x.index_at_or_before(s);
                for i in 0..n {
                    for j in (i + 1)..n {
                        let b = c.entry(k, i, j, s);
                        out[i * n + j] = b;
                        out[j * n + i] = b;
                    }
                }
            }
        }
    }

    /// Absolute times at which a coupled field changes value.
    pub fn breakpoints(&self) -> Option<Vec<f64>> {
        match self {
            CoefficientField::Coupled(c) => {
                Some((0..c.x.len()).map(|k| c.x.absolute_time(k)).collect())
            }
            _ => None,
        }
    }
}

impl CoupledField {
    fn entry(&self, k: usize, i: usize, j: usize, s: f64) -> f64 {
        let e = if s > self.onset {
            regularization_sign(i, j, self.eps)
        } else {
            0.0
        };
        let x = &self.x.states[k].values;
        let y = &self.y.states[k].values;
        1.0 / (x.len() as f64 * (x[i] - x[j] + e) * (y[i] - y[j] + e))
    }
}

/// Result of [`evolve_parabolic_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicRun {
    pub v: Vec<f64>,
    pub steps: usize,
    /// Trapezoidal `int sum_{j,k} B_jk (v_j - v_k)^2 ds`.
    pub dissipation: f64,
    /// Largest `dt * max_i sum_j B_ij` met along the run.
    pub max_courant: f64,
}

fn dissipation(b: &[f64], v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        let row = &b[i * n..(i + 1) * n];
        for j in (i + 1)..n {
            let d = v[i] - v[j];
            acc += row[j] * d * d;
        }
    }
    2.0 * acc
}

fn max_row_sum(b: &[f64], n: usize) -> (usize, f64) {
    (0..n)
        .map(|i| (i, b[i * n..(i + 1) * n].iter().sum::<f64>()))
        .fold((0, 0.0), |acc, r| if r.1 > acc.1 { r } else { acc })
}

/// Solves `dv/dt = -B(t) v` on `[t0, t1]` by explicit Euler with the
/// coefficients frozen at the left end of each step.
///
/// Every step moves mass pairwise, so `sum_i v_i` is conserved, and with
/// `dt * max_i sum_j B_ij <= 1` each update is a convex combination, which
/// gives the maximum principle. A larger step is rejected with
/// [`Error::StepSize`]. `observer` sees `(t, v)` at `t0` and after every step.
pub fn evolve_parabolic_with(
    v0: &[f64],
    field: &CoefficientField,
    t0: f64,
    t1: f64,
    dt: f64,
    mut observer: impl FnMut(f64, &[f64]),
) -> Result<ParabolicRun> {
    let n = field.n();
    if v0.len() != n {
        return domain(format!("vector length {} != N = {n}", v0.len()));
    }
    if !(t1 > t0) {
        return domain(format!("need t1 > t0, got [{t0}, {t1}]"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return domain(format!("time step must be positive, got {dt}"));
    }
    ensure_finite(v0, "initial data")?;
    let mut v = v0.to_vec();
    let mut next = vec![0.0; n];
    let mut b = Vec::new();
    let mut t = t0;
    let mut steps = 0;
    let mut diss = 0.0;
    let mut max_courant: f64 = 0.0;
    let mut static_row = None;
    observer(t, &v);
    while t < t1 - 1e-12 * dt {
        let h = dt.min(t1 - t);
        if b.is_empty() || !field.is_static() {
            field.fill(t, &mut b);
            static_row = None;
        }
        let (row, rs) = *static_row.get_or_insert_with(|| max_row_sum(&b, n));
        let courant = h * rs;
        if courant > 1.0 {
            return Err(Error::StepSize(format!(
                "dt * max row sum = {courant:.4} > 1 at t = {t:.6} (row {row}); use dt <= {:.3e}",
                1.0 / rs
            )));
        }
        max_courant = max_courant.max(courant);
        let d_before = dissipation(&b, &v);
        next.copy_from_slice(&v);
        for i in 0..n {
            let row = &b[i * n..(i + 1) * n];
            let vi = v[i];
            for j in (i + 1)..n {
                let f = h * row[j] * (v[j] - vi);
                next[i] += f;
                next[j] -= f;
            }
        }
        std::mem::swap(&mut v, &mut next);
        diss += 0.5 * h * (d_before + dissipation(&b, &v));
        t += h;
        steps += 1;
        observer(t, &v);
    }
    Ok(ParabolicRun {
        v,
        steps,
        dissipation: diss,
        max_courant,
    })
}

/// [`evolve_parabolic_with`] without an observer.
pub fn evolve_parabolic(
    v0: &[f64],
    field: &CoefficientField,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    Ok(evolve_parabolic_with(v0, field, t0, t1, dt, |_, _| {})?.v)
}

/// `(N^{-1} sum_i |v_i|^p)^{1/p}`.
pub fn norm_p(v: &[f64], p: f64) -> f64 {
    let n = v.len() as f64;
    (v.iter().map(|x| x.abs().powf(p)).sum::<f64>() / n).powf(1.0 / p)
}

/// `max_i |v_i|`.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Largest `s^3 ||v(s)||_inf / ||v(0)||_1` over the recorded window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub constant: f64,
    pub argmax_time: f64,
    pub samples: usize,
}

/// Evolves mean-zero `v0` from time 0 and scans
/// `s^3 ||v(s)||_inf / ||v0||_1` over `s` in `window`, with normalized norms.
pub fn decay_scan(
    v0: &[f64],
    field: &CoefficientField,
    window: (f64, f64),
    dt: f64,
) -> Result<DecayReport> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return domain(format!(
            "decay window must satisfy 0 < lo < hi, got ({lo}, {hi})"
        ));
    }
    let l1 = norm_p(v0, 1.0);
    let mean: f64 = v0.iter().sum();
    if !(l1 > 0.0) || mean.abs() > 1e-12 * l1 * v0.len() as f64 {
        return domain("decay data must be nonzero with zero sum");
    }
    let mut best = (0.0, lo);
    let mut samples = 0;
    evolve_parabolic_with(v0, field, 0.0, hi, dt, |s, v| {
        if s >= lo - 1e-12 {
            samples += 1;
            let r = s.powi(3) * norm_inf(v) / l1;
            if r > best.0 {
                best = (r, s);
            }
        }
    })?;
    Ok(DecayReport {
        constant: best.0,
        argmax_time: best.1,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_validation() {
        assert!(CoefficientField::frozen(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
        assert!(CoefficientField::frozen(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(CoefficientField::frozen(2, vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(CoefficientField::frozen(2, vec![0.0, -1.0, -1.0, 0.0]).is_err());
    }

    #[test]
    fn two_site_exact_solution() {
        let f = CoefficientField::frozen(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let v = evolve_parabolic(&[1.0, -1.0], &f, 0.0, 1.0, 1e-5).unwrap();
        assert!((v[0] - (-2.0f64).exp()).abs() < 1e-4);
        assert_eq!(v[0] + v[1], 0.0);
    }

    #[test]
    fn step_size_violation() {
        let f = CoefficientField::frozen(2, vec![0.0, 10.0, 10.0, 0.0]).unwrap();
        assert!(matches!(
            evolve_parabolic(&[1.0, 0.0], &f, 0.0, 1.0, 0.5),
            Err(Error::StepSize(_))
        ));
    }
}

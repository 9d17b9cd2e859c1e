//! Euler-Maruyama integration of the Ornstein-Uhlenbeck Dyson Brownian
//! motion and its coupled and regularized variants.

use std::io::{Read, Write};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ensembles::{Provenance, Spectrum};
use crate::error::{domain, ensure_finite, Error, Result};
use crate::rng::Rng;

/// Magic bytes opening a binary trajectory file.
pub const TRAJECTORY_MAGIC: &[u8; 8] = b"DBMLTRJ1";

/// Time step as a function of `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum DtPolicy {
    /// A fixed step.
    Fixed { dt: f64 },
    /// `dt = c / N^2`.
    InverseSquare { c: f64 },
    /// `dt = c / N`.
    Microscopic { c: f64 },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Microscopic { c: 0.05 }
    }
}

impl DtPolicy {
    /// Step size for `N` particles.
    pub fn dt(&self, n: usize) -> Result<f64> {
        let n = n as f64;
        let dt = match *self {
            DtPolicy::Fixed { dt } => dt,
            DtPolicy::InverseSquare { c } => c / (n * n),
            DtPolicy::Microscopic { c } => c / n,
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return domain(format!("time step must be positive, got {dt}"));
        }
        Ok(dt)
    }
}

/// Time discretization of the DBM.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Euler-Maruyama followed by re-sorting.
    Explicit,
    /// Euler-Maruyama with the drift evaluated at the new state. The new
    /// state minimizes the strictly convex function
    ///
    /// ```text
    /// |z - x - sqrt(2/N) dB|^2 / 2 + dt (sum_l z_l^2/4 - N^{-1} sum_{k<l} log(z_l - z_k))
    /// ```
    ///
    /// on the ordered chamber, so ordering is preserved without repair.
    #[default]
    DriftImplicit,
}

/// Newton tolerance on the residual of the implicit step.
pub const IMPLICIT_TOL: f64 = 1e-13;

/// Newton iteration cap for the implicit step.
pub const IMPLICIT_MAX_ITER: usize = 60;

/// Recursive step halving, triggered while some gap is below
/// `factor * sqrt(2 dt / N)`.
///
/// Each halving splits the Brownian increment with a Brownian bridge, so the
/// driving path is unchanged. `max_depth` bounds the refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveHalving {
    pub factor: f64,
    pub max_depth: u32,
}

impl Default for AdaptiveHalving {
    fn default() -> Self {
        Self {
            factor: 10.0,
            max_depth: 2,
        }
    }
}

/// Recorded states of a DBM run.
///
/// `times` are measured from `origin`, the absolute time of the first state,
/// so `times[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Spectrum>,
    pub seed: Option<u64>,
    pub dt: f64,
    pub origin: f64,
}

impl Trajectory {
    pub fn new(x0: Spectrum, dt: f64, origin: f64, seed: Option<u64>) -> Self {
        Self {
            times: vec![0.0],
            states: vec![x0],
            seed,
            dt,
            origin,
        }
    }

    pub fn n(&self) -> usize {
        self.states.first().map_or(0, Spectrum::n)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Absolute time of record `k`.
    pub fn absolute_time(&self, k: usize) -> f64 {
        self.origin + self.times[k]
    }

    pub fn last(&self) -> &Spectrum {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    /// Index of the last record at or before absolute time `s`.
    pub fn index_at_or_before(&self, s: f64) -> usize {
        let rel = s - self.origin;
        let tol = 1e-12 * rel.abs().max(1.0);
        self.times
            .partition_point(|&t| t <= rel + tol)
            .saturating_sub(1)
    }

    /// The record at absolute time `s`, if one was stored there.
    pub fn state_at(&self, s: f64) -> Option<&Spectrum> {
        let k = self.index_at_or_before(s);
        let rel = s - self.origin;
        ((self.times[k] - rel).abs() <= 1e-9 * rel.abs().max(1.0)).then(|| &self.states[k])
    }

    fn push(&mut self, t: f64, values: Vec<f64>) {
        let provenance = Provenance {
            flow_time: self.origin + t,
            ..self.states[0].provenance.clone()
        };
        self.times.push(t);
        self.states.push(Spectrum { values, provenance });
    }

    /// Writes the header `DBMLTRJ1`, `N`, `dt`, `origin`, the seed flag and
    /// seed, then one frame `(time, N values)` per record, all little endian.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(TRAJECTORY_MAGIC)?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        w.write_all(&self.origin.to_le_bytes())?;
        w.write_all(&[self.seed.is_some() as u8])?;
        w.write_all(&self.seed.unwrap_or(0).to_le_bytes())?;
        for (t, s) in self.times.iter().zip(&self.states) {
            w.write_all(&t.to_le_bytes())?;
            for v in &s.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != TRAJECTORY_MAGIC {
            return Err(Error::Format("bad trajectory magic".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let dt = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let origin = f64::from_le_bytes(b8);
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        r.read_exact(&mut b8)?;
        let seed = (flag[0] != 0).then(|| u64::from_le_bytes(b8));
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        let frame = 8 * (n + 1);
        if n == 0 || rest.is_empty() || rest.len() % frame != 0 {
            return Err(Error::Format(format!(
                "trajectory body of {} bytes is not a whole number of {frame}-byte frames",
                rest.len()
            )));
        }
        let word = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
        let mut times = Vec::new();
        let mut states = Vec::new();
        for chunk in rest.chunks_exact(frame) {
            times.push(word(&chunk[..8]));
            let values = chunk[8..].chunks_exact(8).map(word).collect();
            states.push(Spectrum {
                values,
                provenance: Provenance::default(),
            });
        }
        Ok(Self {
            times,
            states,
            seed,
            dt,
            origin,
        })
    }
}

const LANES: usize = 8;

/// `N^{-1} sum_{k != l} 1/(x_l - x_k) - x_l/2`.
pub fn dbm_drift(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    for l in 0..n {
        let xl = x[l];
        let (head, tail) = d.split_at_mut(l + 1);
        let xs = &x[l + 1..];
        let mut lanes = [0.0f64; LANES];
        let mut xc = xs.chunks_exact(LANES);
        let mut dc = tail.chunks_exact_mut(LANES);
        for (xk, dk) in (&mut xc).zip(&mut dc) {
            for j in 0..LANES {
                let r = 1.0 / (xl - xk[j]);
                lanes[j] += r;
                dk[j] -= r;
            }
        }
        let mut acc = lanes.iter().sum::<f64>();
        for (xk, dk) in xc.remainder().iter().zip(dc.into_remainder()) {
            let r = 1.0 / (xl - xk);
            acc += r;
            *dk -= r;
        }
        head[l] += acc;
    }
    let inv_n = 1.0 / n as f64;
    for (dl, xl) in d.iter_mut().zip(x) {
        *dl = *dl * inv_n - 0.5 * xl;
    }
    d
}

/// `N` independent `Normal(0, dt)` increments.
pub fn brownian_increments(n: usize, dt: f64, rng: &mut Rng) -> Vec<f64> {
    let sd = dt.sqrt();
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect()
}

fn step_values(x: &[f64], dt: f64, db: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let noise = (2.0 / n as f64).sqrt();
    let drift = dbm_drift(x);
    let mut out: Vec<f64> = (0..n)
        .map(|l| x[l] + noise * db[l] + drift[l] * dt)
        .collect();
    ensure_finite(&out, "DBM step")?;
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn is_strictly_increasing(z: &[f64]) -> bool {
    z.windows(2).all(|w| w[1] > w[0])
}

fn implicit_residual(z: &[f64], w: &[f64], dt: f64) -> Vec<f64> {
    let d = dbm_drift(z);
    (0..z.len()).map(|l| z[l] - w[l] - dt * d[l]).collect()
}

/// Solves the tridiagonal system with diagonal `diag` and symmetric
/// off-diagonal `off` (length n-1) by the Thomas algorithm.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { off[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = off[i] / m;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// Damped Newton iteration for the drift-implicit step, preconditioned by
/// the nearest-neighbour part of the Jacobian.
fn implicit_values(x: &[f64], dt: f64, db: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let noise = (2.0 / n as f64).sqrt();
    let w: Vec<f64> = (0..n).map(|l| x[l] + noise * db[l]).collect();
    let mut z = pair_predictor(&w, dt);
    if !is_strictly_increasing(&z) {
        z = if is_strictly_increasing(&w) {
            w.clone()
        } else {
            x.to_vec()
        };
    }
    let mut g = implicit_residual(&z, &w, dt);
    let mut res = norm_max(&g);
    let c = dt / n as f64;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for _ in 0..IMPLICIT_MAX_ITER {
        if res <= IMPLICIT_TOL {
            return Ok(z);
        }
        diag.iter_mut().for_each(|d| *d = 1.0 + 0.5 * dt);
        for l in 0..n - 1 {
            let gap = z[l + 1] - z[l];
            let a = c / (gap * gap);
            diag[l] += a;
            diag[l + 1] += a;
            off[l] = -a;
        }
        let u = solve_tridiagonal(&diag, &off, &g);
        let mut lambda = 1.0;
        loop {
            let cand: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a - lambda * b).collect();
            if is_strictly_increasing(&cand) {
                let gc = implicit_residual(&cand, &w, dt);
                let rc = norm_max(&gc);
                if rc < res || lambda < 1e-6 {
                    z = cand;
                    g = gc;
                    res = rc;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(Error::StepSize(format!(
                    "implicit DBM step stalled at residual {res:.3e}; reduce dt"
                )));
            }
        }
    }
    if res <= IMPLICIT_TOL {
        return Ok(z);
    }
    Err(Error::StepSize(format!(
        "implicit DBM step did not converge (residual {res:.3e}); reduce dt"
    )))
}

/// Starting guess for the implicit solve: every adjacent pair of `w` is
/// moved apart to the root of the isolated two-particle equation
///
/// ```text
/// g = g_w + 2 dt / (N g)
/// ```
fn pair_predictor(w: &[f64], dt: f64) -> Vec<f64> {
    let n = w.len();
    let a = 8.0 * dt / n as f64;
    let mut z = w.to_vec();
    for l in 0..n.saturating_sub(1) {
        let g = w[l + 1] - w[l];
        let shift = 0.5 * ((g + (g * g + a).sqrt()) / 2.0 - g);
        z[l] -= shift;
        z[l + 1] += shift;
    }
    z
}

fn norm_max(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn advance(x: &[f64], dt: f64, db: &[f64], scheme: Scheme) -> Result<Vec<f64>> {
    match scheme {
        Scheme::Explicit => step_values(x, dt, db),
        Scheme::DriftImplicit => implicit_values(x, dt, db),
    }
}

/// One drift-implicit step (see [`Scheme::DriftImplicit`]).
pub fn dbm_step_implicit(x: &Spectrum, dt: f64, db: &[f64]) -> Result<Spectrum> {
    check_step(x.n(), dt, db)?;
    if !is_strictly_increasing(&x.values) {
        return domain("implicit step needs strictly ordered points");
    }
    Ok(Spectrum {
        values: implicit_values(&x.values, dt, db)?,
        provenance: x.provenance.clone(),
    })
}

fn check_step(n: usize, dt: f64, db: &[f64]) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return domain(format!("time step must be positive, got {dt}"));
    }
    if db.len() != n {
        return domain(format!("{} increments for N = {n}", db.len()));
    }
    Ok(())
}

/// One Euler-Maruyama step of
///
/// ```text
/// dx_l = sqrt(2/N) dB_l + (N^{-1} sum_{k != l} 1/(x_l - x_k) - x_l/2) dt
/// ```
///
/// followed by re-sorting.
pub fn dbm_step(x: &Spectrum, dt: f64, db: &[f64]) -> Result<Spectrum> {
    check_step(x.n(), dt, db)?;
    Ok(Spectrum {
        values: step_values(&x.values, dt, db)?,
        provenance: x.provenance.clone(),
    })
}

/// One step of the regularized dynamics
///
/// ```text
/// dxhat_j = sqrt(2/N) dB_j + (N^{-1} sum_{k != j} 1/(x_j - x_k + eps_jk) - xhat_j/2) dt
/// ```
///
/// with `eps_jk = eps * sign(j - k)` and `x` the driving trajectory. The
/// output is not re-sorted.
pub fn dbm_step_regularized(
    x_ref: &Spectrum,
    xhat: &[f64],
    dt: f64,
    db: &[f64],
    eps: f64,
) -> Result<Vec<f64>> {
    let n = x_ref.n();
    check_step(n, dt, db)?;
    if xhat.len() != n {
        return domain(format!(
            "regularized state has length {} for N = {n}",
            xhat.len()
        ));
    }
    if !(eps > 0.0) {
        return domain(format!("regularization must be positive, got {eps}"));
    }
    let x = &x_ref.values;
    let mut inter = vec![0.0; n];
    for j in 0..n {
        for k in (j + 1)..n {
            // eps_jk = -eps for j < k.
            let r = 1.0 / (x[j] - x[k] - eps);
            inter[j] += r;
            inter[k] -= r;
        }
    }
    let noise = (2.0 / n as f64).sqrt();
    let inv_n = 1.0 / n as f64;
    let out: Vec<f64> = (0..n)
        .map(|j| xhat[j] + noise * db[j] + (inter[j] * inv_n - 0.5 * xhat[j]) * dt)
        .collect();
    ensure_finite(&out, "regularized DBM step")?;
    Ok(out)
}

/// `eps_jk = eps * sign(j - k)`.
pub fn regularization_sign(j: usize, k: usize, eps: f64) -> f64 {
    match j.cmp(&k) {
        std::cmp::Ordering::Greater => eps,
        std::cmp::Ordering::Less => -eps,
        std::cmp::Ordering::Equal => 0.0,
    }
}

fn min_gap(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

/// Options for [`run_coupled_with`] and [`run_single`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub dt: f64,
    /// Record every `record_every` steps; the final state is always kept.
    pub record_every: usize,
    pub adaptive: Option<AdaptiveHalving>,
    pub scheme: Scheme,
    /// Absolute time of the initial state.
    pub origin: f64,
    pub seed: Option<u64>,
}

impl RunOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            record_every: 1,
            adaptive: None,
            scheme: Scheme::default(),
            origin: 0.0,
            seed: None,
        }
    }
}

fn validate_options(opts: &RunOptions, t_end: f64) -> Result<()> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return domain(format!("time step must be positive, got {}", opts.dt));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return domain(format!("run length must be nonnegative, got {t_end}"));
    }
    if opts.record_every == 0 {
        return domain("record_every must be at least 1");
    }
    Ok(())
}

fn step_count(t_end: f64, dt: f64) -> usize {
    let k = (t_end / dt).ceil();
    if k > 0.0 && (t_end / (k - 1.0) - dt).abs() <= 1e-12 * dt {
        (k - 1.0) as usize
    } else {
        k as usize
    }
}

/// Advances every state in `xs` over `dt` with the shared increment `db`,
/// halving while any of them has a gap below the trigger.
fn adaptive_advance(
    xs: &mut [Vec<f64>],
    dt: f64,
    db: &[f64],
    rule: Option<AdaptiveHalving>,
    scheme: Scheme,
    depth: u32,
    rng: &mut Rng,
) -> Result<()> {
    if let Some(rule) = rule {
        if depth < rule.max_depth {
            let n = db.len();
            let threshold = rule.factor * (2.0 * dt / n as f64).sqrt();
            if xs.iter().any(|x| min_gap(x) < threshold) {
                let half = 0.5 * dt;
                let bridge = brownian_increments(n, 0.5 * half, rng);
                let db1: Vec<f64> = db.iter().zip(&bridge).map(|(b, z)| 0.5 * b + z).collect();
                let db2: Vec<f64> = db.iter().zip(&db1).map(|(b, b1)| b - b1).collect();
                adaptive_advance(xs, half, &db1, Some(rule), scheme, depth + 1, rng)?;
                return adaptive_advance(xs, half, &db2, Some(rule), scheme, depth + 1, rng);
            }
        }
    }
    for x in xs.iter_mut() {
        *x = advance(x, dt, db, scheme)?;
    }
    Ok(())
}

fn run_many(
    starts: Vec<&Spectrum>,
    t_end: f64,
    opts: &RunOptions,
    rng: &mut Rng,
) -> Result<Vec<Trajectory>> {
    validate_options(opts, t_end)?;
    let n = starts[0].n();
    if starts.iter().any(|s| s.n() != n) {
        return domain("coupled runs need spectra of equal size");
    }
    if n < 2 {
        return domain("DBM needs N >= 2");
    }
    let mut trajs: Vec<Trajectory> = starts
        .iter()
        .map(|s| Trajectory::new((*s).clone(), opts.dt, opts.origin, opts.seed))
        .collect();
    let mut xs: Vec<Vec<f64>> = starts.iter().map(|s| s.values.clone()).collect();
    let steps = step_count(t_end, opts.dt);
    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * opts.dt;
        let h = if k == steps { t_end - t_prev } else { opts.dt };
        let db = brownian_increments(n, h, rng);
        adaptive_advance(&mut xs, h, &db, opts.adaptive, opts.scheme, 0, rng)?;
        if k % opts.record_every == 0 || k == steps {
            let t = if k == steps {
                t_end
            } else {
                k as f64 * opts.dt
            };
            for (traj, x) in trajs.iter_mut().zip(&xs) {
                traj.push(t, x.clone());
            }
        }
    }
    Ok(trajs)
}

/// A single DBM run over `[0, t_end]` relative to `opts.origin`.
pub fn run_single(
    x0: &Spectrum,
    t_end: f64,
    opts: &RunOptions,
    rng: &mut Rng,
) -> Result<Trajectory> {
    Ok(run_many(vec![x0], t_end, opts, rng)?.remove(0))
}

/// Two DBM runs driven by identical Brownian increments, recording every
/// step.
pub fn run_coupled(
    x0: &Spectrum,
    y0: &Spectrum,
    t_end: f64,
    dt: f64,
    rng: &mut Rng,
) -> Result<(Trajectory, Trajectory)> {
    run_coupled_with(x0, y0, t_end, &RunOptions::new(dt), rng)
}

/// [`run_coupled`] with explicit options.
pub fn run_coupled_with(
    x0: &Spectrum,
    y0: &Spectrum,
    t_end: f64,
    opts: &RunOptions,
    rng: &mut Rng,
) -> Result<(Trajectory, Trajectory)> {
    let mut v = run_many(vec![x0, y0], t_end, opts, rng)?;
    let y = v.pop().expect("two trajectories");
    let x = v.pop().expect("two trajectories");
    Ok((x, y))
}

/// Time-indexed vectors, e.g. the rescaled difference of a coupled pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    /// Absolute times.
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// `delta_l(t) = e^{t/2} (x_l(t) - y_l(t))` at the recorded times.
pub fn delta_process(x: &Trajectory, y: &Trajectory) -> Result<TimeSeries> {
    if x.times != y.times || x.origin != y.origin || x.n() != y.n() {
        return domain("trajectories are not recorded on a common grid");
    }
    let mut times = Vec::with_capacity(x.len());
    let mut values = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let t = x.absolute_time(k);
        let w = (0.5 * t).exp();
        times.push(t);
        values.push(
            x.states[k]
                .values
                .iter()
                .zip(&y.states[k].values)
                .map(|(a, b)| w * (a - b))
                .collect(),
        );
    }
    Ok(TimeSeries { times, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn two_particle_drift() {
        let d = dbm_drift(&[-1.0, 1.0]);
        assert_eq!(d, vec![-0.25 + 0.5, 0.25 - 0.5]);
    }

    #[test]
    fn step_count_covers_interval() {
        assert_eq!(step_count(1.0, 0.25), 4);
        assert_eq!(step_count(1.0, 0.3), 4);
        assert_eq!(step_count(0.0, 0.1), 0);
        assert_eq!(step_count(0.1, 0.01), 10);
    }

    #[test]
    fn trajectory_roundtrip() {
        let x0 = Spectrum::from_values(vec![-1.0, 0.0, 1.0]);
        let mut rng = seeded(1);
        let mut opts = RunOptions::new(0.01);
        opts.seed = Some(1);
        opts.origin = 0.5;
        let t = run_single(&x0, 0.05, &opts, &mut rng).unwrap();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        let back = Trajectory::read_binary(&buf[..]).unwrap();
        assert_eq!(back.times, t.times);
        assert_eq!(back.seed, Some(1));
        assert_eq!(back.origin, 0.5);
        for (a, b) in back.states.iter().zip(&t.states) {
            assert_eq!(a.values, b.values);
        }
        assert!(Trajectory::read_binary(&buf[..buf.len() - 3]).is_err());
    }
}

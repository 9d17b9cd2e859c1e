//! Experiments on independent ensemble draws and on the kernel.

use dbmlab_core::dynamics::{run_single, RunOptions, Scheme};
use dbmlab_core::ensembles::{EnsembleSpec, Spectrum};
use dbmlab_core::kernel::{
    apply_k, cheb_function, cheb_p, heat_kernel_series, heat_kernel_unchecked, kernel_bound_check,
    kernel_grid_csv,
};
use dbmlab_core::quad::SemicircleRule;
use dbmlab_core::rng::{stream, stream_id};
use dbmlab_core::semicircle::{ks_distance, rigidity_report, QuantileTable};
use dbmlab_core::stats::{
    fourier_cutoff, gap_statistics, level_repulsion_probe, loop_equation_residual, normalized_gaps,
    two_sample, universality_sample, CutoffProfile, FourierGrid, Observable2D, RepulsionReport,
    ROLE_A, ROLE_A_FLOW, ROLE_B,
};
use num_complex::Complex64;
use serde_json::json;

use super::*;
use crate::output::Check;
use crate::replicate::replicate;

fn samples(config: &RunConfig, workers: usize) -> Result<Vec<Spectrum>> {
    let spec = ensemble_spec(config.ensemble, config.n)?;
    replicate(config.n_samples, workers, |k| {
        sample(&spec, 0.0, config.seed, k)
    })
}

/// KS distance between each empirical spectral distribution and the semicircle.
pub fn semicircle(config: &RunConfig, workers: usize) -> Result<Outcome> {
    let spec = ensemble_spec(config.ensemble, config.n)?;
    let ks = replicate(config.n_samples, workers, |k| {
        Ok(ks_distance(&sample(&spec, 0.0, config.seed, k)?.values))
    })?;
    let (mean, se) = mean_se(&ks);
    let rows: Vec<Vec<String>> = ks
        .iter()
        .enumerate()
        .map(|(k, v)| vec![k.to_string(), v.to_string()])
        .collect();
    Ok(Outcome {
        results: json!({
            "mean_ks": mean,
            "stderr_ks": se,
            "max_ks": ks.iter().cloned().fold(0.0, f64::max),
            "samples": ks.len(),
        }),
        rows: csv("replica,ks", &rows),
        extra: vec![],
        checks: vec![Check::new(
            "mean_ks",
            mean <= KS_CEILING,
            format!("mean KS {mean:.5} <= {KS_CEILING}"),
        )],
    })
}

/// Fraction of samples violating the rigidity bound at `xi`.
pub fn rigidity(config: &RunConfig, workers: usize) -> Result<Outcome> {
    let spec = ensemble_spec(config.ensemble, config.n)?;
    let table = QuantileTable::new(config.n)?;
    let reports = replicate(config.n_samples, workers, |k| {
        Ok(rigidity_report(
            &sample(&spec, 0.0, config.seed, k)?,
            &table,
            config.xi,
        )?)
    })?;
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let rate = failed as f64 / reports.len() as f64;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .enumerate()
        .map(|(k, r)| {
            vec![
                k.to_string(),
                r.violations.len().to_string(),
                r.max_scaled_dev.to_string(),
            ]
        })
        .collect();
    Ok(Outcome {
        results: json!({
            "xi": config.xi,
            "samples": reports.len(),
            "samples_with_violations": failed,
            "violation_rate": rate,
            "max_scaled_dev": reports.iter().map(|r| r.max_scaled_dev).fold(0.0, f64::max),
        }),
        rows: csv("replica,violations,max_scaled_dev", &rows),
        extra: vec![],
        checks: vec![Check::new(
            "violation_rate",
            rate <= RIGIDITY_RATE,
            format!("violation rate {rate:.4} <= {RIGIDITY_RATE}"),
        )],
    })
}

/// Bulk grid of the kernel comparisons.
fn bulk_points() -> Vec<f64> {
    (0..50).map(|k| -1.6 + 3.2 * k as f64 / 49.0).collect()
}

/// Heat-kernel bounds, series agreement, eigenrelation and stationarity.
pub fn kernel_check(config: &RunConfig) -> Result<Outcome> {
    let table = QuantileTable::new(config.n)?;
    let t = config.t();
    let bounds = kernel_bound_check(t, &table, config.alpha)?;
    let pts = bulk_points();
    let mut series_diff: f64 = 0.0;
    let mut stationarity: f64 = 0.0;
    let rule = SemicircleRule::new(4000);
    for &tt in &[0.2, 1.0] {
        for &x in &pts {
            for &y in &pts {
                let (s, _) = heat_kernel_series(tt, x, y, 300)?;
                series_diff = series_diff.max((heat_kernel_unchecked(tt, x, y) - s).abs());
            }
            stationarity =
                stationarity.max((rule.integrate(|y| heat_kernel_unchecked(tt, x, y)) - 1.0).abs());
        }
    }
    let mut eigen: f64 = 0.0;
    for n in 0..=8 {
        let f = cheb_function(n);
        for &x in &pts {
            eigen = eigen.max((apply_k(&f, x, 4000)? - 0.5 * n as f64 * cheb_p(n, x)).abs());
        }
    }
    let consts = [bounds.c_upper, bounds.c_sum, bounds.c_derivative];
    let rows = vec![
        vec!["c_upper".to_string(), bounds.c_upper.to_string()],
        vec!["c_sum".to_string(), bounds.c_sum.to_string()],
        vec!["c_derivative".to_string(), bounds.c_derivative.to_string()],
        vec!["series_max_diff".to_string(), series_diff.to_string()],
        vec!["eigenrelation_max_err".to_string(), eigen.to_string()],
        vec!["stationarity_max_err".to_string(), stationarity.to_string()],
    ];
    Ok(Outcome {
        results: json!({
            "t": t,
            "bounds": bounds,
            "series_max_diff": series_diff,
            "eigenrelation_max_err": eigen,
            "stationarity_max_err": stationarity,
        }),
        rows: csv("quantity,value", &rows),
        extra: vec![(
            "kernel_grid.csv".to_string(),
            kernel_grid_csv(t, &table).into_bytes(),
        )],
        checks: vec![
            Check::new(
                "bound_constants",
                consts
                    .iter()
                    .all(|c| c.is_finite() && *c <= KERNEL_CONSTANT_CEILING),
                format!("constants {consts:?} <= {KERNEL_CONSTANT_CEILING}"),
            ),
            Check::new(
                "series",
                series_diff <= KERNEL_SERIES_TOL,
                format!(
                    "closed form vs 300-term series {series_diff:.3e} <= {KERNEL_SERIES_TOL:e}"
                ),
            ),
            Check::new(
                "eigenrelation",
                eigen <= EIGENRELATION_TOL,
                format!("K P_n vs (n/2) P_n {eigen:.3e} <= {EIGENRELATION_TOL:e}"),
            ),
            Check::new(
                "stationarity",
                stationarity <= STATIONARITY_TOL,
                format!("int p_t drho - 1 {stationarity:.3e} <= {STATIONARITY_TOL:e}"),
            ),
        ],
    })
}

/// Unfolded bulk gap histogram.
pub fn gaps(config: &RunConfig, workers: usize) -> Result<Outcome> {
    let table = QuantileTable::new(config.n)?;
    let all = samples(config, workers)?;
    let hist = gap_statistics(&all, &table, config.alpha, 0.05)?;
    let mut rows = Vec::with_capacity(all.len());
    for (k, s) in all.iter().enumerate() {
        let g = normalized_gaps(std::slice::from_ref(s), &table, config.alpha)?;
        rows.push(vec![k.to_string(), mean_se(&g).0.to_string()]);
    }
    let dev = (hist.mean - 1.0).abs();
    Ok(Outcome {
        results: json!({
            "mean_gap": hist.mean,
            "stderr_gap": hist.stderr,
            "gaps": hist.count,
            "bin_width": hist.bin_width,
        }),
        rows: csv("replica,mean_gap", &rows),
        extra: vec![("gaps.csv".to_string(), hist.to_csv().into_bytes())],
        checks: vec![Check::new(
            "mean_gap",
            dev <= GAP_MEAN_TOL,
            format!("|mean gap - 1| = {dev:.5} <= {GAP_MEAN_TOL}"),
        )],
    })
}

fn dbm_samples(
    config: &RunConfig,
    spec: &EnsembleSpec,
    dt: f64,
    workers: usize,
) -> Result<Vec<Spectrum>> {
    let t = config.t();
    replicate(config.n_samples, workers, |k| {
        let x0 = sample(spec, 0.0, config.seed, k)?;
        let opts = RunOptions {
            record_every: usize::MAX,
            scheme: Scheme::Explicit,
            ..RunOptions::new(dt)
        };
        let traj = run_single(
            &x0,
            t,
            &opts,
            &mut stream(config.seed, stream_id(ROLE_DBM, k)),
        )?;
        Ok(traj.last().clone())
    })
}

fn slope_json(r: &RepulsionReport) -> serde_json::Value {
    json!({"slope": r.slope, "slope_stderr": r.slope_stderr, "excluded": r.excluded})
}

/// Small-gap probabilities of the central gap and the fitted exponent.
pub fn repulsion(config: &RunConfig, workers: usize) -> Result<Outcome> {
    use crate::config::RepulsionPath;
    let table = QuantileTable::new(config.n)?;
    let spec = ensemble_spec(config.ensemble, config.n)?;
    let i = config.n / 2 - 1;
    let (all, sensitivity) = match config.repulsion_path {
        RepulsionPath::Exact => (samples(config, workers)?, None),
        RepulsionPath::Dbm => {
            let dt = config.dt.dt(config.n)?;
            let fine = dbm_samples(config, &spec, dt, workers)?;
            let coarse = dbm_samples(config, &spec, 2.0 * dt, workers)?;
            let r = level_repulsion_probe(&coarse, &table, i, &config.eps_grid)?;
            (fine, Some((dt, r)))
        }
    };
    let report = level_repulsion_probe(&all, &table, i, &config.eps_grid)?;
    let rows: Vec<Vec<String>> = all
        .iter()
        .enumerate()
        .map(|(k, s)| {
            vec![
                k.to_string(),
                (config.n as f64 * (s.values[i + 1] - s.values[i])).to_string(),
            ]
        })
        .collect();
    let (lo, hi) = REPULSION_SLOPE;
    let slope = report.slope;
    let mut results = json!({
        "index": i,
        "samples": report.samples,
        "path": config.repulsion_path,
        "fit": slope_json(&report),
        "points": report.points,
    });
    if let Some((dt, coarse)) = &sensitivity {
        results["dt_sensitivity"] = json!({
            "dt": dt,
            "coarse_dt": 2.0 * dt,
            "coarse_fit": slope_json(coarse),
            "slope_change": match (slope, coarse.slope) {
                (Some(a), Some(b)) => Some(b - a),
                _ => None,
            },
        });
    }
    Ok(Outcome {
        results,
        rows: csv("replica,scaled_gap", &rows),
        extra: vec![("repulsion.csv".to_string(), report.to_csv().into_bytes())],
        checks: vec![Check::new(
            "slope",
            slope.is_some_and(|s| (lo..=hi).contains(&s)),
            format!("fitted exponent {slope:?} in [{lo}, {hi}]"),
        )],
    })
}

/// Loop equation residual at `z = E + i eta`.
pub fn loop_equation(config: &RunConfig, workers: usize) -> Result<Outcome> {
    let all = samples(config, workers)?;
    let z = Complex64::new(config.energy, config.eta);
    let r = loop_equation_residual(&all, z, config.beta)?;
    let nf = config.n as f64;
    let rows: Vec<Vec<String>> = all
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let sn: Complex64 = s.values.iter().map(|&x| 1.0 / (z - x)).sum::<Complex64>() / nf;
            vec![k.to_string(), sn.re.to_string(), sn.im.to_string()]
        })
        .collect();
    let (abs, se) = (r.abs(), r.stderr());
    Ok(Outcome {
        results: json!({
            "z_re": z.re,
            "z_im": z.im,
            "residual_re": r.re,
            "residual_im": r.im,
            "residual_abs": abs,
            "stderr_re": r.se_re,
            "stderr_im": r.se_im,
            "stderr": se,
            "samples": r.samples,
            "warning": r.warning,
        }),
        rows: csv("replica,s_re,s_im", &rows),
        extra: vec![],
        checks: vec![Check::new(
            "residual",
            abs <= SE_MULTIPLE * se,
            format!("|residual| {abs:.3e} <= {SE_MULTIPLE} x {se:.3e}"),
        )],
    })
}

/// `Q(x, y) = exp(-x^2/8) y^2 (1 - y^2/9)^3` on `|y| <= 3`, before the
/// Fourier cutoff in `x`.
pub fn universality_observable(m: f64) -> Result<Observable2D> {
    let base = Observable2D::separable(
        "window",
        3.0,
        |x| (-x * x / 8.0).exp(),
        |y| {
            let u = y / 3.0;
            if u.abs() >= 1.0 {
                0.0
            } else {
                y * y * (1.0 - u * u).powi(3)
            }
        },
    );
    Ok(fourier_cutoff(
        &base,
        m,
        &CutoffProfile::smoothstep(),
        FourierGrid::default(),
    )?)
}

/// Fixed-energy comparison of an evolved ensemble against GOE.
pub fn universality(config: &RunConfig, workers: usize) -> Result<Outcome> {
    let spec_a = ensemble_spec(config.ensemble, config.n)?;
    let spec_b = EnsembleSpec::goe(config.n);
    let t = config.t();
    let q = universality_observable(config.cutoff_m)?;
    let a = replicate(config.n_samples, workers, |k| {
        Ok(universality_sample(
            &spec_a,
            t,
            config.energy,
            &q,
            config.seed,
            (ROLE_A, ROLE_A_FLOW),
            k,
        )?)
    })?;
    let b = replicate(config.n_samples, workers, |k| {
        Ok(universality_sample(
            &spec_b,
            0.0,
            config.energy,
            &q,
            config.seed,
            (ROLE_B, ROLE_B),
            k,
        )?)
    })?;
    let r = two_sample(&a, &b);
    let rows: Vec<Vec<String>> = a
        .iter()
        .zip(&b)
        .enumerate()
        .map(|(k, (u, v))| vec![k.to_string(), u.to_string(), v.to_string()])
        .collect();
    Ok(Outcome {
        results: json!({
            "t": t,
            "ensemble_a": config.ensemble,
            "ensemble_b": "goe",
            "observable": q.label,
            "fourier_m": q.fourier_m,
            "report": r,
        }),
        rows: csv("replica,q_a,q_b", &rows),
        extra: vec![],
        checks: vec![Check::new(
            "z_score",
            r.z_score.abs() <= SE_MULTIPLE,
            format!("|z| = {:.3} <= {SE_MULTIPLE}", r.z_score.abs()),
        )],
    })
}

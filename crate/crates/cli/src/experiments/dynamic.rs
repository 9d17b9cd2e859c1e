//! Experiments on Dyson Brownian motion and the parabolic equation.

use std::sync::Arc;

use dbmlab_core::dynamics::{
    coupled_from_ensembles, decay_scan, delta_process, holder_oscillation, regularity_check,
    CoefficientField, HomogenizationSetup, XiGrid,
};
use dbmlab_core::rng::{stream, stream_id};
use dbmlab_core::semicircle::QuantileTable;
use rand::Rng as _;
use serde_json::json;

use super::*;
use crate::output::Check;
use crate::replicate::replicate;

/// Coupled DBM homogenization residuals.
pub fn homogenization(config: &RunConfig, workers: usize) -> Result<Outcome> {
    let mut setup = HomogenizationSetup::new(config.n);
    setup.kind = config.ensemble;
    setup.tau = config.tau;
    setup.energy = config.energy;
    setup.dt = config.dt;
    let reports = replicate(
        config.n_samples,
        workers,
        |k| Ok(setup.run(config.seed, k)?),
    )?;
    let maxima: Vec<f64> = reports.iter().map(|r| r.max.unwrap_or(f64::NAN)).collect();
    let med = median(&maxima);
    let (mean, se) = mean_se(&maxima);
    let rows: Vec<Vec<String>> = reports
        .iter()
        .enumerate()
        .map(|(k, r)| {
            vec![
                k.to_string(),
                maxima[k].to_string(),
                r.indices.len().to_string(),
            ]
        })
        .collect();
    Ok(Outcome {
        results: json!({
            "t0": setup.t0(),
            "t": setup.t(),
            "dt": setup.dt.dt(config.n)?,
            "delta1": setup.delta1,
            "median_max_residual": med,
            "mean_max_residual": mean,
            "stderr_max_residual": se,
            "samples": reports.len(),
            "empty_index_sets": reports.iter().filter(|r| r.max.is_none()).count(),
        }),
        rows: csv("replica,max_residual,indices", &rows),
        extra: vec![],
        checks: vec![Check::new(
            "median_residual",
            med <= HOMOGENIZATION_CEILING,
            format!("median bulk residual {med:.4} <= {HOMOGENIZATION_CEILING}"),
        )],
    })
}

/// Decay constant of the parabolic equation with mean-zero data.
pub fn decay(config: &RunConfig, workers: usize) -> Result<Outcome> {
    let n = config.n;
    let table = QuantileTable::new(n)?;
    let field = CoefficientField::synthetic(&table);
    let dt = config.dt.dt(n)?;
    let bulk = table.bulk_range(config.alpha);
    let results = replicate(config.n_samples, workers, |k| {
        let i = if k == 0 {
            n / 2 - 1
        } else {
            stream(config.seed, stream_id(ROLE_DATA, k)).random_range(*bulk.start()..*bulk.end())
        };
        let mut v0 = vec![0.0; n];
        v0[i] = 1.0;
        v0[i + 1] = -1.0;
        Ok((i, decay_scan(&v0, &field, (0.1, 1.0), dt)?))
    })?;
    let worst = results.iter().map(|(_, r)| r.constant).fold(0.0, f64::max);
    let rows: Vec<Vec<String>> = results
        .iter()
        .enumerate()
        .map(|(k, (i, r))| {
            vec![
                k.to_string(),
                i.to_string(),
                r.constant.to_string(),
                r.argmax_time.to_string(),
            ]
        })
        .collect();
    Ok(Outcome {
        results: json!({
            "dt": dt,
            "window": [0.1, 1.0],
            "constant": worst,
            "samples": results.len(),
        }),
        rows: csv("replica,index,constant,argmax_time", &rows),
        extra: vec![],
        checks: vec![Check::new(
            "decay_constant",
            worst.is_finite() && worst <= DECAY_CEILING,
            format!("sup s^3 |v(s)|_inf / |v0|_1 = {worst:.4} <= {DECAY_CEILING}"),
        )],
    })
}

struct RegularityRow {
    rho_min: f64,
    worst_ratio: f64,
    regular: bool,
    oscillation: Option<f64>,
    frames: Option<(Vec<u8>, Vec<u8>)>,
}

/// Regularity and Hölder oscillation of the coupled difference.
pub fn regularity(config: &RunConfig, workers: usize) -> Result<Outcome> {
    let n = config.n;
    let nf = n as f64;
    let t = config.t();
    let dt = config.dt.dt(n)?;
    let table = QuantileTable::new(n)?;
    let z = table
        .first_at_or_above(config.energy)
        .ok_or_else(|| CliError::Usage("energy: no typical location at or above E".into()))?;
    let grid = XiGrid::dyadic(n, 1.0);
    let ell1 = t * nf.powf(-0.2);
    let rows = replicate(config.n_samples, workers, |k| {
        let (x, y) = coupled_from_ensembles(n, config.ensemble, t, dt, 1, config.seed, k)?;
        let frames = if config.frames && k == 0 {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            x.write_binary(&mut a)?;
            y.write_binary(&mut b)?;
            Some((a, b))
        } else {
            None
        };
        let delta = delta_process(&x, &y)?;
        let osc = holder_oscillation(&delta, config.energy, t, ell1, &table)?;
        let field =
            CoefficientField::coupled(Arc::new(x), Arc::new(y), 0.5 * nf.powf(-0.25), nf.powi(-6))?;
        let r = regularity_check(&field, z, t, &grid)?;
        Ok(RegularityRow {
            rho_min: r.rho_min,
            worst_ratio: r.worst_ratio,
            regular: r.regular_at(config.rho),
            oscillation: osc.oscillation,
            frames,
        })
    })?;
    let regular = rows.iter().filter(|r| r.regular).count();
    let fraction = regular as f64 / rows.len() as f64;
    let osc: Vec<f64> = rows.iter().filter_map(|r| r.oscillation).collect();
    let med_osc = median(&osc);
    let rho: Vec<f64> = rows.iter().map(|r| r.rho_min).collect();
    let table_rows: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .map(|(k, r)| {
            vec![
                k.to_string(),
                r.rho_min.to_string(),
                r.worst_ratio.to_string(),
                r.regular.to_string(),
                r.oscillation.map_or_else(String::new, |v| v.to_string()),
            ]
        })
        .collect();
    let mut extra = Vec::new();
    if let Some((a, b)) = rows.first().and_then(|r| r.frames.clone()) {
        extra.push(("trajectory_x.bin".to_string(), a));
        extra.push(("trajectory_y.bin".to_string(), b));
    }
    Ok(Outcome {
        results: json!({
            "t": t,
            "dt": dt,
            "z": z,
            "rho": config.rho,
            "ell1": ell1,
            "regular_fraction": fraction,
            "median_rho_min": median(&rho),
            "max_rho_min": rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            "median_oscillation": med_osc,
            "samples": rows.len(),
        }),
        rows: csv(
            "replica,rho_min,worst_ratio,regular,oscillation",
            &table_rows,
        ),
        extra,
        checks: vec![
            Check::new(
                "regular_fraction",
                fraction >= REGULAR_FRACTION,
                format!(
                    "{regular}/{} replicas regular at rho = {}",
                    rows.len(),
                    config.rho
                ),
            ),
            Check::new(
                "holder_oscillation",
                med_osc <= HOLDER_CEILING,
                format!("median oscillation {med_osc:.4} <= {HOLDER_CEILING}"),
            ),
        ],
    })
}

//! Linear statistics against their Gaussian limit.

use dbmlab_core::func::TestFunction;
use dbmlab_core::kernel::AntiderivativeP;
use dbmlab_core::semicircle::QuantileTable;
use dbmlab_core::stats::{
    characteristic_fn, clt_parameters, linear_statistic, pairwise_sum, LinearStatistic,
};
use num_complex::Complex64;
use serde_json::json;

use super::*;
use crate::config::StatFunction;
use crate::output::Check;
use crate::replicate::replicate;

fn build(
    f: StatFunction,
    config: &RunConfig,
    table: &QuantileTable,
) -> Result<(String, LinearStatistic)> {
    let (label, tf) = match f {
        StatFunction::X => ("x".to_string(), TestFunction::identity()),
        StatFunction::X2 => ("x2".to_string(), TestFunction::square()),
        StatFunction::Antiderivative => {
            let p = AntiderivativeP::new(config.t(), config.energy, table)?;
            ("antiderivative".to_string(), p.as_test_function())
        }
    };
    Ok((label, LinearStatistic::new(tf)?))
}

/// Sample variance and the standard error `sqrt((m4 - s^4)/n)`.
fn variance_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    let d2: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
    let d4: Vec<f64> = d2.iter().map(|x| x * x).collect();
    let var = pairwise_sum(&d2) / (n - 1.0);
    let m4 = pairwise_sum(&d4) / n;
    (var, ((m4 - var * var).max(0.0) / n).sqrt())
}

/// Linear statistic CLT: variance, mean and characteristic function.
pub fn clt(config: &RunConfig, workers: usize) -> Result<Outcome> {
    let table = QuantileTable::new(config.n)?;
    let stats: Vec<(String, LinearStatistic)> = config
        .functions
        .iter()
        .map(|&f| build(f, config, &table))
        .collect::<Result<_>>()?;
    let spec = ensemble_spec(config.ensemble, config.n)?;
    let values: Vec<Vec<f64>> = replicate(config.n_samples, workers, |k| {
        let s = sample(&spec, 0.0, config.seed, k)?;
        Ok(stats.iter().map(|(_, f)| linear_statistic(&s, f)).collect())
    })?;
    let mut per_function = Vec::new();
    let mut checks = Vec::new();
    let mut extra = Vec::new();
    for (col, (label, f)) in stats.iter().enumerate() {
        let v: Vec<f64> = values.iter().map(|row| row[col]).collect();
        let p = clt_parameters(f, config.beta, config.n)?;
        let (mean, mean_se) = mean_se(&v);
        let (var, var_se) = variance_se(&v);
        let ci = [var - SE_MULTIPLE * var_se, var + SE_MULTIPLE * var_se];
        let z = if v.len() >= 100 {
            characteristic_fn(&v, &config.lambdas)?
        } else {
            Vec::new()
        };
        let mut z_rows = Vec::new();
        let mut z_json = Vec::new();
        let mut z_err: f64 = 0.0;
        for point in &z {
            let l = point.lambda;
            let pred = Complex64::new(-0.5 * l * l * p.sigma2, l * p.delta).exp();
            let err = (point.value() - pred).norm();
            z_err = z_err.max(err);
            z_json.push(json!({
                "lambda": l, "re": point.re, "im": point.im, "stderr": point.stderr,
                "predicted_re": pred.re, "predicted_im": pred.im, "abs_error": err,
            }));
            z_rows.push(vec![
                l.to_string(),
                point.re.to_string(),
                point.im.to_string(),
                point.stderr.to_string(),
                pred.re.to_string(),
                pred.im.to_string(),
            ]);
        }
        extra.push((
            format!("lambdas_{label}.csv"),
            csv("lambda,re,im,stderr,predicted_re,predicted_im", &z_rows).into_bytes(),
        ));
        per_function.push(json!({
            "function": label,
            "sigma2_analytic": p.sigma2,
            "delta": p.delta,
            "eps_f": p.eps_f,
            "sigma2_empirical": var,
            "sigma2_stderr": var_se,
            "sigma2_ci": ci,
            "mean_empirical": mean,
            "mean_stderr": mean_se,
            "characteristic": z_json,
        }));
        checks.push(Check::new(
            &format!("{label}_variance"),
            ci[0] <= p.sigma2 && p.sigma2 <= ci[1],
            format!("sigma2 {:.5} in [{:.5}, {:.5}]", p.sigma2, ci[0], ci[1]),
        ));
        let dm = (mean - p.delta).abs();
        checks.push(Check::new(
            &format!("{label}_mean"),
            dm <= SE_MULTIPLE * mean_se,
            format!("|mean - delta| {dm:.4} <= {SE_MULTIPLE} x {mean_se:.4}"),
        ));
        if !z.is_empty() {
            checks.push(Check::new(
                &format!("{label}_characteristic"),
                z_err <= CHARACTERISTIC_TOL,
                format!("max |Z - Gaussian| {z_err:.4} <= {CHARACTERISTIC_TOL}"),
            ));
        }
    }
    let header = std::iter::once("replica".to_string())
        .chain(stats.iter().map(|(l, _)| l.clone()))
        .collect::<Vec<_>>()
        .join(",");
    let rows: Vec<Vec<String>> = values
        .iter()
        .enumerate()
        .map(|(k, row)| {
            std::iter::once(k.to_string())
                .chain(row.iter().map(|x| x.to_string()))
                .collect()
        })
        .collect();
    Ok(Outcome {
        results: json!({ "t": config.t(), "beta": config.beta, "functions": per_function, "samples": values.len() }),
        rows: csv(&header, &rows),
        extra,
        checks,
    })
}

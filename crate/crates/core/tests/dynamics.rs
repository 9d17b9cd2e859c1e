use std::sync::Arc;

use dbmlab_core::dynamics::*;
use dbmlab_core::ensembles::{eigenvalues, sample_goe, EnsembleKind, Spectrum};
use dbmlab_core::kernel::PsiOperator;
use dbmlab_core::rng::{seeded, stream};
use dbmlab_core::semicircle::{ks_distance, QuantileTable};
use dbmlab_core::Error;
use proptest::prelude::*;
use rand::Rng;

fn goe_spectrum(n: usize, seed: u64) -> Spectrum {
    eigenvalues(&sample_goe(n, &mut seeded(seed))).unwrap()
}

#[test]
fn two_particle_step_without_noise() {
    let x = Spectrum::from_values(vec![-1.0, 1.0]);
    let dt = 1e-3;
    let y = dbm_step(&x, dt, &[0.0, 0.0]).unwrap();
    // drift_1 = (1/2)(1/(-2)) + 1/2 = 1/4, drift_2 = -1/4.
    assert!((y.values[0] - (-1.0 + 0.25 * dt)).abs() < 1e-15);
    assert!((y.values[1] - (1.0 - 0.25 * dt)).abs() < 1e-15);
    let fixed = Spectrum::from_values(vec![-1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()]);
    let z = dbm_step(&fixed, dt, &[0.0, 0.0]).unwrap();
    assert!((z.values[0] - fixed.values[0]).abs() < 1e-15);
    let zi = dbm_step_implicit(&fixed, dt, &[0.0, 0.0]).unwrap();
    assert!((zi.values[1] - fixed.values[1]).abs() < 1e-13);
}

#[test]
fn step_rejects_bad_arguments() {
    let x = Spectrum::from_values(vec![-1.0, 1.0]);
    assert!(dbm_step(&x, 0.0, &[0.0, 0.0]).is_err());
    assert!(dbm_step(&x, 0.1, &[0.0]).is_err());
    assert!(dbm_step_regularized(&x, &[0.0, 0.0], 0.1, &[0.0, 0.0], 0.0).is_err());
}

#[test]
fn center_of_mass_is_exactly_ornstein_uhlenbeck() {
    let x = goe_spectrum(50, 1);
    let dt = 1e-4;
    let mut rng = seeded(2);
    let db = brownian_increments(50, dt, &mut rng);
    let y = dbm_step(&x, dt, &db).unwrap();
    let s0: f64 = x.values.iter().sum();
    let s1: f64 = y.values.iter().sum();
    let want = s0 * (1.0 - 0.5 * dt) + (2.0f64 / 50.0).sqrt() * db.iter().sum::<f64>();
    assert!((s1 - want).abs() < 1e-12);
}

#[test]
fn implicit_step_solves_its_equation() {
    let x = goe_spectrum(80, 3);
    let dt = 1e-3;
    let db = brownian_increments(80, dt, &mut seeded(4));
    let y = dbm_step_implicit(&x, dt, &db).unwrap();
    let d = dbm_drift(&y.values);
    let noise = (2.0f64 / 80.0).sqrt();
    for l in 0..80 {
        let r = y.values[l] - x.values[l] - noise * db[l] - dt * d[l];
        assert!(r.abs() <= IMPLICIT_TOL);
    }
    assert!(y.values.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn goe_is_stationary_under_the_flow() {
    let n = 100;
    let mut ks = Vec::new();
    for seed in 0..20 {
        let x0 = goe_spectrum(n, 100 + seed);
        let mut opts = RunOptions::new(1e-4);
        opts.record_every = usize::MAX;
        let t = run_single(&x0, 1.0, &opts, &mut stream(seed, 9)).unwrap();
        ks.push(ks_distance(&t.last().values));
    }
    let mean = ks.iter().sum::<f64>() / ks.len() as f64;
    assert!(mean <= 0.05, "mean KS {mean}");
}

#[test]
fn mean_identity_by_monte_carlo() {
    let n = 20;
    let x0 = Spectrum::from_values(
        (0..n)
            .map(|k| -1.5 + 3.0 * k as f64 / (n - 1) as f64 + 0.3)
            .collect(),
    );
    let s0: f64 = x0.values.iter().sum();
    let t = 0.5;
    let sums: Vec<f64> = (0..400)
        .map(|r| {
            let opts = RunOptions {
                record_every: usize::MAX,
                ..RunOptions::new(1e-3)
            };
            run_single(&x0, t, &opts, &mut stream(77, r))
                .unwrap()
                .last()
                .values
                .iter()
                .sum()
        })
        .collect();
    let m = sums.iter().sum::<f64>() / sums.len() as f64;
    let sd = (sums.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (sums.len() - 1) as f64).sqrt();
    let se = sd / (sums.len() as f64).sqrt();
    assert!(
        (m - (-0.5 * t).exp() * s0).abs() <= 3.0 * se,
        "{m} vs {}",
        (-0.5 * t).exp() * s0
    );
}

#[test]
fn coupled_runs_are_deterministic_and_identical_for_equal_starts() {
    let x0 = goe_spectrum(40, 5);
    let (a, b) = run_coupled(&x0, &x0, 0.05, 1e-3, &mut seeded(6)).unwrap();
    assert_eq!(a.states, b.states);
    let (c, _) = run_coupled(&x0, &x0, 0.05, 1e-3, &mut seeded(6)).unwrap();
    assert_eq!(a.states, c.states);
    assert_eq!(a.times[0], 0.0);
    assert!((a.times.last().unwrap() - 0.05).abs() < 1e-15);
    let y0 = goe_spectrum(39, 5);
    assert!(run_coupled(&x0, &y0, 0.05, 1e-3, &mut seeded(6)).is_err());
}

#[test]
fn exchange_symmetry_negates_delta() {
    let x0 = goe_spectrum(40, 7);
    let y0 = goe_spectrum(40, 8);
    for scheme in [Scheme::Explicit, Scheme::DriftImplicit] {
        let opts = RunOptions {
            scheme,
            adaptive: Some(AdaptiveHalving::default()),
            ..RunOptions::new(1e-3)
        };
        let (x, y) = run_coupled_with(&x0, &y0, 0.05, &opts, &mut seeded(9)).unwrap();
        let (y2, x2) = run_coupled_with(&y0, &x0, 0.05, &opts, &mut seeded(9)).unwrap();
        let d = delta_process(&x, &y).unwrap();
        let d2 = delta_process(&x2, &y2).unwrap();
        let swapped = delta_process(&y2, &x2).unwrap();
        assert_eq!(d, d2);
        for (u, v) in d.values.iter().zip(&swapped.values) {
            for (a, b) in u.iter().zip(v) {
                assert_eq!(*a, -*b);
            }
        }
    }
}

#[test]
fn coupled_difference_contracts() {
    let n = 60;
    for seed in 0..20u64 {
        let x0 = goe_spectrum(n, 200 + seed);
        let y0 = goe_spectrum(n, 300 + seed);
        let sup0 = x0
            .values
            .iter()
            .zip(&y0.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let opts = RunOptions {
            record_every: 10,
            ..RunOptions::new(0.01 / n as f64)
        };
        let (x, y) = run_coupled_with(&x0, &y0, 0.05, &opts, &mut stream(seed, 1)).unwrap();
        for k in 0..x.len() {
            let sup = x.states[k]
                .values
                .iter()
                .zip(&y.states[k].values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(sup <= 1.05 * sup0, "seed {seed}: {sup} > {sup0}");
        }
    }
}

#[test]
fn coupled_difference_obeys_the_parabolic_identity() {
    let n = 50;
    let x0 = goe_spectrum(n, 10);
    let y0 = goe_spectrum(n, 11);
    let dt = 1e-5;
    let opts = RunOptions {
        scheme: Scheme::Explicit,
        ..RunOptions::new(dt)
    };
    let (x, y) = run_coupled_with(&x0, &y0, 20.0 * dt, &opts, &mut seeded(12)).unwrap();
    let d = delta_process(&x, &y).unwrap();
    for k in 0..x.len() - 1 {
        let xs = &x.states[k].values;
        let ys = &y.states[k].values;
        for l in 0..n {
            let mut rhs = 0.0;
            for m in 0..n {
                if m != l {
                    let b = 1.0 / (n as f64 * (xs[l] - xs[m]) * (ys[l] - ys[m]));
                    rhs += b * (d.values[k][m] - d.values[k][l]);
                }
            }
            let lhs = (d.values[k + 1][l] - d.values[k][l]) / dt;
            assert!(
                (lhs - rhs).abs() <= 1e-2 * (1.0 + rhs.abs()),
                "step {k} index {l}"
            );
        }
    }
}

#[test]
fn regularized_dynamics() {
    let x = goe_spectrum(30, 13);
    let db = vec![0.0; 30];
    let huge = dbm_step_regularized(&x, &x.values, 0.01, &db, 1e3).unwrap();
    for (a, b) in huge.iter().zip(&x.values) {
        assert!((a - b * (1.0 - 0.005)).abs() < 1e-4);
    }
    assert_eq!(regularization_sign(3, 1, 0.5), 0.5);
    assert_eq!(
        regularization_sign(1, 3, 0.5),
        -regularization_sign(3, 1, 0.5)
    );
}

#[test]
fn regularized_trajectory_stays_close() {
    let n = 100;
    let eps = (n as f64).powi(-6);
    let t0 = 0.5 * (n as f64).powf(-0.25);
    let dt = 1e-5;
    let steps = ((1.0 - t0) / dt).round() as usize;
    let sup = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max)
    };
    for seed in 0..20u64 {
        let mut rng = stream(seed, 2);
        let mut x = goe_spectrum(n, 400 + seed);
        let mut xhat = x.values.clone();
        let mut plain = x.values.clone();
        let (mut reg, mut drift): (f64, f64) = (0.0, 0.0);
        for _ in 0..steps {
            let db = brownian_increments(n, dt, &mut rng);
            x = dbm_step_implicit(&x, dt, &db).unwrap();
            xhat = dbm_step_regularized(&x, &xhat, dt, &db, eps).unwrap();
            plain = dbm_step_regularized(&x, &plain, dt, &db, f64::MIN_POSITIVE).unwrap();
            reg = reg.max(sup(&xhat, &plain));
            drift = drift.max(sup(&plain, &x.values));
        }
        assert!(
            reg <= 1e-6,
            "seed {seed}: regularization moved the path by {reg}"
        );
        assert!(
            drift <= 10.0 * dt,
            "seed {seed}: discretization gap {drift}"
        );
    }
}

#[test]
fn parabolic_basic_properties() {
    let table = QuantileTable::new(100).unwrap();
    let field = CoefficientField::synthetic(&table);
    let c = vec![0.7; 100];
    assert_eq!(evolve_parabolic(&c, &field, 0.0, 0.5, 1e-3).unwrap(), c);
    assert!(matches!(
        evolve_parabolic(&c, &field, 0.0, 0.5, 1.0),
        Err(Error::StepSize(_))
    ));
    assert!(evolve_parabolic(&c, &field, 0.5, 0.5, 1e-3).is_err());
    assert_eq!(field.mode(), FieldMode::Synthetic);
    for i in 0..100 {
        assert_eq!(field.get(i, i, 0.0), 0.0);
        for j in 0..100 {
            assert_eq!(field.get(i, j, 0.0), field.get(j, i, 0.0));
        }
    }
}

#[test]
fn decay_constant_is_finite() {
    let n = 500;
    let table = QuantileTable::new(n).unwrap();
    let field = CoefficientField::synthetic(&table);
    let mut v0 = vec![0.0; n];
    v0[0] = 1.0;
    v0[1] = -1.0;
    let r = decay_scan(&v0, &field, (0.1, 1.0), 5e-4).unwrap();
    assert!(
        r.constant.is_finite() && r.constant > 0.0 && r.constant <= 50.0,
        "{r:?}"
    );
    assert!(decay_scan(&vec![1.0; n], &field, (0.1, 1.0), 5e-4).is_err());
}

#[test]
fn energy_identity() {
    let n = 200;
    let table = QuantileTable::new(n).unwrap();
    let field = CoefficientField::synthetic(&table);
    let mut rng = seeded(14);
    let v0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let e0: f64 = v0.iter().map(|x| x * x).sum();
    let run = evolve_parabolic_with(&v0, &field, 0.0, 0.3, 1e-4, |_, _| {}).unwrap();
    let e1: f64 = run.v.iter().map(|x| x * x).sum();
    assert!(
        ((e0 - e1) - run.dissipation).abs() <= 0.01 * run.dissipation,
        "{} vs {}",
        e0 - e1,
        run.dissipation
    );
}

fn random_field(n: usize, rng: &mut impl Rng) -> CoefficientField {
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let b = if rng.random_bool(0.3) {
                rng.random_range(0.0..5.0)
            } else {
                0.0
            };
            w[i * n + j] = b;
            w[j * n + i] = b;
        }
    }
    CoefficientField::frozen(n, w).unwrap()
}

#[test]
fn parabolic_conservation_on_random_fields() {
    let mut rng = seeded(15);
    for _ in 0..100 {
        let n = rng.random_range(2..40);
        let field = random_field(n, &mut rng);
        let v0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s0: f64 = v0.iter().sum();
        let (mut l2, mut linf) = (norm_p(&v0, 2.0), norm_inf(&v0));
        let mut ok = true;
        let run = evolve_parabolic_with(&v0, &field, 0.0, 1.0, 1e-3, |_, v| {
            let (a, b) = (norm_p(v, 2.0), norm_inf(v));
            ok &= a <= l2 + 1e-12 && b <= linf + 1e-12;
            l2 = a;
            linf = b;
        })
        .unwrap();
        assert!(ok);
        assert!((run.v.iter().sum::<f64>() - s0).abs() <= 1e-12);
    }
}

#[test]
fn homogenization_residual_examples() {
    let n = 120;
    let table = QuantileTable::new(n).unwrap();
    let x0 = goe_spectrum(n, 16);
    let mut opts = RunOptions::new(0.01 / n as f64);
    opts.origin = 0.2;
    opts.record_every = usize::MAX;
    let (xt, yt) = run_coupled_with(&x0, &x0, 0.3, &opts, &mut seeded(17)).unwrap();
    let r = homogenization_residual(&xt, &yt, 0.2, 0.5, 0.2, 0.5, &table).unwrap();
    assert!(!r.indices.is_empty());
    assert!(r.residuals.iter().all(|v| *v == 0.0));
    let empty = homogenization_residual(&xt, &yt, 0.2, 0.5, 0.2, -0.9, &table).unwrap();
    assert!(empty.indices.is_empty() && empty.max.is_none());
    assert!(homogenization_residual(&xt, &yt, 0.2, 0.45, 0.2, 0.5, &table).is_err());
}

#[test]
fn psi_difference_ignores_common_shift() {
    let n = 150;
    let table = QuantileTable::new(n).unwrap();
    let psi = PsiOperator::new(0.3, &table).unwrap();
    let x = goe_spectrum(n, 18).values;
    let y = goe_spectrum(n, 19).values;
    let a: Vec<f64> = psi
        .apply(&x)
        .unwrap()
        .iter()
        .zip(psi.apply(&y).unwrap())
        .map(|(p, q)| p - q)
        .collect();
    let xs: Vec<f64> = x.iter().zip(&table.gamma).map(|(u, g)| u - g).collect();
    let ys: Vec<f64> = y.iter().zip(&table.gamma).map(|(u, g)| u - g).collect();
    let b: Vec<f64> = psi
        .apply(&xs)
        .unwrap()
        .iter()
        .zip(psi.apply(&ys).unwrap())
        .map(|(p, q)| p - q)
        .collect();
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).abs() < 1e-14);
    }
}

#[test]
fn regularity_examples() {
    let n = 200;
    let table = QuantileTable::new(n).unwrap();
    let grid = XiGrid::dyadic(n, 1.0);
    let zero = regularity_check(&CoefficientField::zero(n), 100, 0.3, &grid).unwrap();
    assert_eq!(zero.worst_ratio, 0.0);
    assert!(zero.regular_at(-10.0));
    let syn = regularity_check(&CoefficientField::synthetic(&table), 100, 0.3, &grid).unwrap();
    assert!(syn.rho_min.is_finite() && syn.rho_min < 0.2, "{syn:?}");
    assert!(syn.regular_at(syn.rho_min + 1e-12));
    assert!(syn.points > 0);
}

#[test]
fn regularity_of_coupled_field() {
    let n = 300;
    let t = (n as f64).powf(-0.2);
    let mut regular = 0;
    for seed in 0..20u64 {
        let (x, y) =
            coupled_from_ensembles(n, EnsembleKind::Bernoulli, t, 0.05 / n as f64, 1, seed, 0)
                .unwrap();
        let onset = 0.5 * (n as f64).powf(-0.25);
        let f = CoefficientField::coupled(Arc::new(x), Arc::new(y), onset, (n as f64).powi(-6))
            .unwrap();
        assert_eq!(f.mode(), FieldMode::Coupled);
        let r = regularity_check(&f, n / 2, t, &XiGrid::dyadic(n, 1.0)).unwrap();
        if r.regular_at(0.5) {
            regular += 1;
        }
    }
    assert!(regular >= 18, "{regular}/20 regular");
}

#[test]
fn holder_examples() {
    let n = 100;
    let table = QuantileTable::new(n).unwrap();
    let series = TimeSeries {
        times: vec![0.0, 0.1, 0.2],
        values: vec![vec![1.0; n]; 3],
    };
    let r = holder_oscillation(&series, 0.0, 0.2, 0.1, &table).unwrap();
    assert_eq!(r.oscillation, Some(0.0));
    assert_eq!(r.times, 2);
    let mut rng = seeded(20);
    let rough = TimeSeries {
        times: (0..10).map(|k| k as f64 * 0.01).collect(),
        values: (0..10)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect(),
    };
    let wide = holder_oscillation(&rough, 0.1, 0.09, 0.2, &table)
        .unwrap()
        .oscillation
        .unwrap();
    let narrow = holder_oscillation(&rough, 0.1, 0.09, 0.1, &table)
        .unwrap()
        .oscillation
        .unwrap();
    assert!(narrow <= wide);
    let none = holder_oscillation(&rough, 1.9999, 0.09, 1e-6, &table).unwrap();
    assert!(none.oscillation.is_none() && none.indices == 0);
    assert!(holder_oscillation(&rough, 0.0, 0.09, 0.0, &table).is_err());
}

#[test]
fn holder_oscillation_of_coupled_difference() {
    let n = 500;
    let t = (n as f64).powf(-0.2);
    let ell1 = t * (n as f64).powf(-0.2);
    let table = QuantileTable::new(n).unwrap();
    let mut osc: Vec<f64> = (0..20u64)
        .map(|seed| {
            let (x, y) =
                coupled_from_ensembles(n, EnsembleKind::Bernoulli, t, 0.05 / n as f64, 10, seed, 1)
                    .unwrap();
            let d = delta_process(&x, &y).unwrap();
            holder_oscillation(&d, 0.2, t, ell1, &table)
                .unwrap()
                .oscillation
                .unwrap()
        })
        .collect();
    osc.sort_by(f64::total_cmp);
    let median = 0.5 * (osc[9] + osc[10]);
    assert!(median <= 0.5, "median oscillation {median}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parabolic_is_contractive(seed in 0u64..1000, n in 2usize..25) {
        let mut rng = seeded(seed);
        let field = random_field(n, &mut rng);
        let v0: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let v = evolve_parabolic(&v0, &field, 0.0, 0.5, 1e-3).unwrap();
        prop_assert!(norm_inf(&v) <= norm_inf(&v0) + 1e-12);
        prop_assert!(norm_p(&v, 2.0) <= norm_p(&v0, 2.0) + 1e-12);
        prop_assert!((v.iter().sum::<f64>() - v0.iter().sum::<f64>()).abs() <= 1e-12 * (1.0 + n as f64));
    }

    #[test]
    fn steps_keep_order(seed in 0u64..1000, dt in 1e-5f64..1e-2) {
        let x = goe_spectrum(30, seed);
        let db = brownian_increments(30, dt, &mut seeded(seed + 1));
        let a = dbm_step(&x, dt, &db).unwrap();
        let b = dbm_step_implicit(&x, dt, &db).unwrap();
        prop_assert!(a.values.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(b.values.windows(2).all(|w| w[1] > w[0]));
    }
}

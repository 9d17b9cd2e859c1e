use dbmlab_core::ensembles::*;
use dbmlab_core::rng::{seeded, stream};
use proptest::prelude::*;

#[test]
fn zero_and_diagonal_matrices() {
    let z = SymmetricMatrix::zeros(3);
    assert_eq!(eigenvalues(&z).unwrap().values, vec![0.0, 0.0, 0.0]);
    let d = SymmetricMatrix::from_upper(3, |i, j| if i == j { [3.0, 1.0, 2.0][i] } else { 0.0 });
    assert_eq!(eigenvalues(&d).unwrap().values, vec![1.0, 2.0, 3.0]);
}

#[test]
fn goe_trace_identities_and_residuals() {
    let mut rng = seeded(11);
    let h = sample_generalized_wigner(&EnsembleSpec::goe(200), &mut rng).unwrap();
    let (spec, check) = eigen_check(&h).unwrap();
    let n = 200.0;
    let tr: f64 = h.trace();
    let sum: f64 = spec.values.iter().sum();
    assert!((sum - tr).abs() <= 1e-9 * n * tr.abs().max(1.0));
    let fro = h.frobenius_sq();
    let sum2: f64 = spec.values.iter().map(|v| v * v).sum();
    assert!((sum2 - fro).abs() <= 1e-9 * fro);
    assert!(check.max_residual <= 1e-10, "{:?}", check);
    assert!(check.trace_error <= 1e-9 && check.frobenius_error <= 1e-9);
    assert!(spec.values.windows(2).all(|w| w[0] <= w[1]));
    let plain = eigenvalues(&h).unwrap();
    for (a, b) in plain.values.iter().zip(&spec.values) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn goe_entry_variances() {
    let n = 4;
    let mut rng = seeded(2);
    let reps = 40_000;
    let (mut d, mut o) = (0.0, 0.0);
    for _ in 0..reps {
        let h = sample_generalized_wigner(&EnsembleSpec::goe(n), &mut rng).unwrap();
        d += h.get(0, 0).powi(2);
        o += h.get(0, 1).powi(2);
    }
    let (d, o) = (d / reps as f64, o / reps as f64);
    assert!((d - 0.5).abs() < 0.02, "diag var {d}");
    assert!((o - 0.25).abs() < 0.01, "offdiag var {o}");
}

#[test]
fn bernoulli_entry_moments() {
    let n = 100;
    let spec = EnsembleSpec::bernoulli(n);
    let reps = 100_000;
    let mut rng = seeded(17);
    let (mut m, mut v) = (0.0, 0.0);
    for _ in 0..reps {
        let h = sample_generalized_wigner(&spec, &mut rng).unwrap();
        let x = h.get(0, 1);
        m += x;
        v += x * x;
    }
    let mean = m / reps as f64;
    let var = v / reps as f64 - mean * mean;
    assert!(mean.abs() <= 3.0 * (n as f64).powf(-0.5) * (reps as f64).powf(-0.5));
    assert!((var * n as f64 - 1.0).abs() < 0.05);
}

#[test]
fn flow_preserves_entry_variance() {
    let n = 100;
    let spec = EnsembleSpec::bernoulli(n);
    let mut rng = seeded(23);
    let reps = 10_000;
    let mut acc = Vec::with_capacity(reps);
    for _ in 0..reps {
        let h = sample_generalized_wigner(&spec, &mut rng).unwrap();
        let ht = matrix_flow(&h, 1.0, &mut rng).unwrap();
        acc.push(ht.get(0, 1));
    }
    let mean: f64 = acc.iter().sum::<f64>() / reps as f64;
    let var: f64 = acc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let target = (-1f64).exp() / n as f64 + (1.0 - (-1f64).exp()) / n as f64;
    assert!(
        (var / target - 1.0).abs() < 0.05,
        "var {var} target {target}"
    );
}

#[test]
fn flow_coefficients_at_large_time() {
    let mut rng = seeded(4);
    let h0 = SymmetricMatrix::from_upper(3, |_, _| 1.0);
    let mut a = stream(4, 1);
    let g = sample_goe(3, &mut a);
    let mut b = stream(4, 1);
    let ht = matrix_flow(&h0, 60.0, &mut b).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert!((ht.get(i, j) - g.get(i, j)).abs() < 1e-12);
        }
    }
    assert!(matrix_flow(&h0, 0.0, &mut rng).unwrap() == h0);
}

#[test]
fn sampling_is_a_pure_function_of_the_seed() {
    let spec = EnsembleSpec::bernoulli(30);
    let a = sample_generalized_wigner(&spec, &mut seeded(99)).unwrap();
    let b = sample_generalized_wigner(&spec, &mut seeded(99)).unwrap();
    assert_eq!(a.as_slice(), b.as_slice());
    let g1 = sample_generalized_wigner(&EnsembleSpec::goe(30), &mut seeded(5)).unwrap();
    let g2 = sample_generalized_wigner(&EnsembleSpec::goe(30), &mut seeded(5)).unwrap();
    assert_eq!(g1, g2);
}

#[test]
fn goe_spectrum_is_rotation_invariant() {
    let n = 60;
    let mut rng = seeded(31);
    let h = sample_goe(n, &mut rng);
    let o = haar_orthogonal(n, &mut rng);
    let r = h.conjugate(&o);
    let a = eigenvalues(&h).unwrap();
    let b = eigenvalues(&r).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn lower_triangle_is_mirrored() {
    let data: Vec<f64> = (0..9).map(|k| k as f64).collect();
    let m = SymmetricMatrix::from_row_major(3, &data).unwrap();
    assert_eq!(m.get(1, 0), 1.0);
    assert_eq!(m.get(2, 1), 5.0);
}

proptest! {
    #[test]
    fn eigenvalues_sorted_and_trace_exact(entries in prop::collection::vec(-3.0f64..3.0, 36)) {
        let m = SymmetricMatrix::from_row_major(6, &entries).unwrap();
        let s = eigenvalues(&m).unwrap();
        prop_assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = s.values.iter().sum();
        let scale = m.frobenius_sq().sqrt().max(1.0);
        prop_assert!((sum - m.trace()).abs() <= 1e-9 * scale);
        let sum2: f64 = s.values.iter().map(|v| v * v).sum();
        prop_assert!((sum2 - m.frobenius_sq()).abs() <= 1e-9 * scale * scale);
    }
}

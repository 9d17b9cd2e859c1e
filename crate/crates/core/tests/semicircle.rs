use std::f64::consts::PI;

use dbmlab_core::ensembles::Spectrum;
use dbmlab_core::quad::{adaptive_simpson, SemicircleRule};
use dbmlab_core::semicircle::*;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn density_values() {
    assert!((density(0.0) - 1.0 / PI).abs() < 1e-16);
    assert_eq!(density(2.0), 0.0);
    assert_eq!(density(-2.0), 0.0);
    assert_eq!(density(3.0), 0.0);
    assert!((density(1.0) - 3f64.sqrt() / (2.0 * PI)).abs() < 1e-16);
}

#[test]
fn density_integrates_to_one() {
    let rule = SemicircleRule::new(2000);
    assert!((rule.integrate(|_| 1.0) - 1.0).abs() < 1e-10);
    let direct = adaptive_simpson(&density, -2.0, 2.0, 1e-12);
    assert!((direct - 1.0).abs() < 1e-8);
}

#[test]
fn stieltjes_at_imaginary_unit_multiple() {
    let m = stieltjes(Complex64::new(0.0, 2.0)).unwrap();
    assert!((m - Complex64::new(0.0, 1.0 - 2f64.sqrt())).norm() < 1e-15);
}

#[test]
fn stieltjes_at_ten_is_small_root() {
    let disc: f64 = 100.0 - 4.0;
    let small = (10.0 - disc.sqrt()) / 2.0;
    let m = stieltjes(Complex64::new(10.0, 0.0)).unwrap();
    assert!((m.re - small).abs() < 1e-14 && m.im.abs() < 1e-15);
    assert!((m.re - 0.1010205).abs() < 1e-7);
}

#[test]
fn stieltjes_matches_quadrature() {
    let rule = SemicircleRule::new(20_000);
    for &(re, im) in &[
        (0.3, 0.5),
        (-1.5, 1.0),
        (2.5, 0.2),
        (-3.0, -0.7),
        (0.0, -2.0),
    ] {
        let z = Complex64::new(re, im);
        let re_q = rule.integrate(|x| (1.0 / (z - x)).re);
        let im_q = rule.integrate(|x| (1.0 / (z - x)).im);
        let m = stieltjes(z).unwrap();
        assert!((m - Complex64::new(re_q, im_q)).norm() < 1e-9, "z={z}");
    }
}

#[test]
fn stieltjes_derivative_matches_difference_quotient() {
    let z = Complex64::new(0.4, 0.3);
    let h = 1e-6;
    let fd = (stieltjes(z + h).unwrap() - stieltjes(z - h).unwrap()) / (2.0 * h);
    assert!((stieltjes_derivative(z).unwrap() - fd).norm() < 1e-8);
}

#[test]
fn middle_location_is_zero() {
    assert_eq!(QuantileTable::new(5).unwrap().gamma[2], 0.0);
}

#[test]
fn locations_inside_support_and_increasing() {
    for n in [1usize, 2, 7, 100, 1001] {
        let t = QuantileTable::new(n).unwrap();
        assert!(t.gamma.iter().all(|g| g.abs() < 2.0));
        assert!(t.gamma.windows(2).all(|w| w[0] < w[1]));
        for k in 0..n {
            assert!((t.gamma[k] + t.gamma[n - 1 - k]).abs() < 1e-10);
        }
    }
}

#[test]
fn edge_asymptotics() {
    let n = 1000;
    let t = QuantileTable::new(n).unwrap();
    let k = 10;
    let approx = (3.0 * PI * (k as f64 + 0.5) / (2.0 * n as f64)).powf(2.0 / 3.0);
    let ratio = (t.gamma[k] + 2.0) / approx;
    assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn cdf_quantile_round_trip() {
    for n in [10usize, 333, 2000] {
        let t = QuantileTable::new(n).unwrap();
        for (k, g) in t.gamma.iter().enumerate() {
            assert!((cdf(*g) - (k as f64 + 0.5) / n as f64).abs() < 1e-10);
        }
    }
}

#[test]
fn cdf_matches_integrated_density() {
    for &x in &[-1.7, -0.2, 0.9, 1.95] {
        let v = adaptive_simpson(&density, -2.0, x, 1e-13);
        assert!((v - cdf(x)).abs() < 1e-8);
    }
}

#[test]
fn rigidity_exact_locations() {
    let t = QuantileTable::new(100).unwrap();
    let s = Spectrum::from_values(t.gamma.clone());
    let r = rigidity_report(&s, &t, 0.3).unwrap();
    assert!(r.violations.is_empty());
    assert_eq!(r.max_scaled_dev, 0.0);
}

#[test]
fn rigidity_flags_shifted_eigenvalue() {
    let t = QuantileTable::new(100).unwrap();
    let mut v = t.gamma.clone();
    v[49] += 1.0;
    let s = Spectrum {
        values: v,
        provenance: Default::default(),
    };
    let r = rigidity_report(&s, &t, 0.3).unwrap();
    assert_eq!(r.violations, vec![49]);
    assert!(rigidity_report(&s, &QuantileTable::new(99).unwrap(), 0.3).is_err());
}

#[test]
fn csv_export() {
    let csv = QuantileTable::new(3).unwrap().to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "index,gamma");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("2,0"));
}

proptest! {
    #[test]
    fn stieltjes_self_consistent(re in -50.0f64..50.0, im in prop_oneof![-50.0f64..-1e-3, 1e-3f64..50.0]) {
        let z = Complex64::new(re, im);
        let m = stieltjes(z).unwrap();
        prop_assert!((m * m - z * m + 1.0).norm() <= 1e-12 * (1.0 + z.norm() * m.norm()));
        prop_assert!(m.im * z.im < 0.0);
        let mc = stieltjes(z.conj()).unwrap();
        prop_assert!((mc - m.conj()).norm() <= 1e-14);
        prop_assert!(m.norm() < 1.0);
    }

    #[test]
    fn stieltjes_real_axis_outside_support(x in 2.0001f64..100.0, sign in prop::bool::ANY) {
        let x = if sign { x } else { -x };
        let m = stieltjes(Complex64::new(x, 0.0)).unwrap();
        prop_assert!(m.im.abs() < 1e-12);
        prop_assert!(m.re * x > 0.0);
    }
}

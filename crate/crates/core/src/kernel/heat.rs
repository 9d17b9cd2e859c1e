//! Chebyshev basis, the operator `K`, the heat kernel `p_t = e^{-tK}` and
//! the smoothing operator `Psi_s`.
//!
//! With `x = 2 cos(theta)`, `P_n(x) = U_n(x/2) = sin((n+1) theta) / sin(theta)`
//! is an orthonormal basis of `L^2(rho)` and `K P_n = (n/2) P_n`, so
//!
//! ```text
//! p_t(x, y) = sum_n e^{-nt/2} P_n(x) P_n(y)
//!           = (1 - e^{-t}) / (|e^{i(theta+phi)} - e^{-t/2}|^2 |e^{i(theta-phi)} - e^{-t/2}|^2)
//! ```

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::func::TestFunction;
use crate::quad::SemicircleRule;
use crate::semicircle::QuantileTable;

/// Step for central differences in grid scans.
pub const FD_STEP: f64 = 1e-6;

/// `P_n(x)` by the three-term recursion `P_{n+1} = x P_n - P_{n-1}`.
pub fn cheb_p(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for _ in 1..n {
        let p2 = x * p1 - p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `P_0(x), ..., P_nmax(x)`.
pub fn cheb_p_all(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(1.0);
    if nmax >= 1 {
        out.push(x);
    }
    for k in 2..=nmax {
        out.push(x * out[k - 1] - out[k - 2]);
    }
    out
}

/// Chebyshev polynomial `P_n` as a [`TestFunction`].
pub fn cheb_function(n: usize) -> TestFunction {
    TestFunction::new(
        format!("P_{n}"),
        move |x| cheb_p(n, x),
        move |x| cheb_p_derivatives(n, x).0,
        move |x| cheb_p_derivatives(n, x).1,
    )
}

/// `(P_n'(x), P_n''(x))` from the differentiated recursion.
pub fn cheb_p_derivatives(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    let (mut s0, mut s1) = (0.0, 0.0);
    for _ in 1..n {
        let p2 = x * p1 - p0;
        let d2 = p1 + x * d1 - d0;
        let s2 = 2.0 * d1 + x * s1 - s0;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
        s0 = s1;
        s1 = s2;
    }
    (d1, s1)
}

/// `(K f)(x) = p.v. ∫ (f(x) - f(y)) / (x - y)^2 dρ(y)`.
///
/// Midpoint rule with `m` cells of width `pi/m` in `theta = arccos(y/2)`,
/// aligned so that `theta(x)` is a cell centre. Paired cells on either side
/// cancel the `1/(x - y)` singularity. The centre cell contributes the regular
/// part of the second-order Taylor expansion of the integrand in `theta`:
/// `-f''(x)/2` times the cell's `rho`-mass, plus `(3/(2 pi)) f'(x) cos(theta) h`
/// from the curvature of `y(theta)` and of the density.
pub fn apply_k(f: &TestFunction, x: f64, m: usize) -> Result<f64> {
    let h = PI / m as f64;
    if !(x.abs() < 2.0) {
        return domain(format!("x = {x} outside (-2, 2)"));
    }
    let tx = (0.5 * x).acos();
    if tx < h || PI - tx < h {
        return domain(format!("x = {x} within one node spacing of the edge"));
    }
    let fx = f.value(x);
    let w = |theta: f64| {
        let s = theta.sin();
        2.0 / PI * s * s * h
    };
    let mut acc = -0.5 * f.d2(x) * w(tx) + 1.5 / PI * f.d1(x) * tx.cos() * h;
    let k_lo = -((tx / h).ceil() as i64 - 1);
    let k_hi = ((PI - tx) / h).ceil() as i64 - 1;
    for k in k_lo..=k_hi {
        if k == 0 {
            continue;
        }
        let theta = tx + k as f64 * h;
        if theta <= 0.0 || theta >= PI {
            continue;
        }
        let y = 2.0 * theta.cos();
        let d = x - y;
        acc += (fx - f.value(y)) / (d * d) * w(theta);
    }
    Ok(acc)
}

/// `|e^{i psi} - q|^2 = (1 - q)^2 + 4 q sin^2(psi/2)`.
#[inline]
fn modulus_sq(psi: f64, q: f64) -> f64 {
    let s = (0.5 * psi).sin();
    let a = 1.0 - q;
    a * a + 4.0 * q * s * s
}

/// Heat kernel in angle variables, valid for all `theta, phi` in `[0, pi]`.
#[inline]
pub fn heat_kernel_angles(t: f64, theta: f64, phi: f64) -> f64 {
    let q = (-0.5 * t).exp();
    let num = -(-t).exp_m1();
    num / (modulus_sq(theta + phi, q) * modulus_sq(theta - phi, q))
}

/// Heat kernel on `[-2, 2]^2` without argument checks.
#[inline]
pub fn heat_kernel_unchecked(t: f64, x: f64, y: f64) -> f64 {
    heat_kernel_angles(t, angle(x), angle(y))
}

#[inline]
pub(crate) fn angle(x: f64) -> f64 {
    (0.5 * x).clamp(-1.0, 1.0).acos()
}

/// `p_t(x, y)` for `x, y` in `(-2, 2)`.
pub fn heat_kernel(t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("kernel time must be positive, got {t}"));
    }
    if !(x.abs() < 2.0 && y.abs() < 2.0) {
        return domain(format!("arguments ({x}, {y}) outside (-2, 2)"));
    }
    Ok(heat_kernel_unchecked(t, x, y))
}

/// `∂_y p_t(x, y)` in closed form, valid on `[-2, 2]` including the endpoints.
pub fn heat_kernel_dy(t: f64, x: f64, y: f64) -> f64 {
    let q = (-0.5 * t).exp();
    let theta = angle(x);
    let phi = angle(y);
    let sp = phi.sin();
    if sp.abs() < 1e-7 {
        // Limit at y = +-2, where ∂_phi p vanishes.
        if y > 0.0 {
            return edge_dy(t, q, theta);
        }
        return -edge_dy(t, q, PI - theta);
    }
    let dp = modulus_sq(theta + phi, q);
    let dm = modulus_sq(theta - phi, q);
    let p = -(-t).exp_m1() / (dp * dm);
    let d_phi = -p * (2.0 * q * (theta + phi).sin() / dp - 2.0 * q * (theta - phi).sin() / dm);
    d_phi / (-2.0 * sp)
}

fn edge_dy(t: f64, q: f64, theta: f64) -> f64 {
    let d = modulus_sq(theta, q);
    let p = -(-t).exp_m1() / (d * d);
    let s = theta.sin();
    p * (2.0 * q * theta.cos() / d - 4.0 * q * q * s * s / (d * d))
}

/// Truncated expansion `sum_{n <= nmax} e^{-nt/2} P_n(x) P_n(y)` and a bound
/// on the omitted tail.
///
/// The tail bound uses `|P_n(2 cos theta)| <= 1/|sin theta|`:
/// `e^{-(nmax+1)t/2} B_x B_y / (1 - e^{-t/2})`.
pub fn heat_kernel_series(t: f64, x: f64, y: f64, nmax: usize) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return domain(format!("kernel time must be positive, got {t}"));
    }
    let px = cheb_p_all(nmax, x);
    let py = cheb_p_all(nmax, y);
    let q = (-0.5 * t).exp();
    let mut w = 1.0;
    let mut s = 0.0;
    for n in 0..=nmax {
        s += w * px[n] * py[n];
        w *= q;
    }
    let bound = |z: f64| {
        let st = angle(z).sin();
        if st > 0.0 {
            1.0 / st
        } else {
            f64::INFINITY
        }
    };
    let tail = q.powi(nmax as i32 + 1) * bound(x) * bound(y) / (1.0 - q);
    Ok((s, tail))
}

/// Smallest constants for which the kernel bounds hold on the grid.
#[derive(Debug, Clone, Serialize)]
pub struct KernelBoundReport {
    pub n: usize,
    pub t: f64,
    pub alpha: f64,
    /// `max p_t (t^2 + Δ^2) / t`.
    pub c_upper: f64,
    /// `max_i N^{-1} sum_j p_t(gamma_i, gamma_j)`.
    pub c_sum: f64,
    /// `max |∂ p_t| (t^2 + Δ^2)^2 / (t |Δ|)` over `j != i`.
    pub c_derivative: f64,
}

/// Scans bulk rows `i` and all columns `j` of the kernel matrix.
pub fn kernel_bound_check(t: f64, table: &QuantileTable, alpha: f64) -> Result<KernelBoundReport> {
    if !(t > 0.0 && t <= 1.0) {
        return domain(format!("kernel time must lie in (0, 1], got {t}"));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return domain(format!("alpha must lie in (0, 1/2), got {alpha}"));
    }
    let g = &table.gamma;
    let n = table.n;
    let mut c_upper = 0.0f64;
    let mut c_sum = 0.0f64;
    let mut c_der = 0.0f64;
    for i in table.bulk_range(alpha) {
        let mut row = 0.0;
        for j in 0..n {
            let d = g[i] - g[j];
            let p = heat_kernel_unchecked(t, g[i], g[j]);
            row += p;
            c_upper = c_upper.max(p * (t * t + d * d) / t);
            if j != i {
                let dp = (heat_kernel_unchecked(t, g[i], g[j] + FD_STEP)
                    - heat_kernel_unchecked(t, g[i], g[j] - FD_STEP))
                    / (2.0 * FD_STEP);
                let r = t * t + d * d;
                c_der = c_der.max(dp.abs() * r * r / (t * d.abs()));
            }
        }
        c_sum = c_sum.max(row / n as f64);
    }
    Ok(KernelBoundReport {
        n,
        t,
        alpha,
        c_upper,
        c_sum,
        c_derivative: c_der,
    })
}

/// Kernel matrix dump as CSV rows `i,j,p_t` with one-based indices.
pub fn kernel_grid_csv(t: f64, table: &QuantileTable) -> String {
    let mut s = String::from("i,j,p_t\n");
    for (i, &x) in table.gamma.iter().enumerate() {
        for (j, &y) in table.gamma.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{:.17e}\n",
                i + 1,
                j + 1,
                heat_kernel_unchecked(t, x, y)
            ));
        }
    }
    s
}

/// `(Psi_s v)_i = e^{-s/2} N^{-1} sum_j p_s(gamma_i, gamma_j) v_j` with the
/// kernel matrix precomputed.
#[derive(Debug, Clone)]
pub struct PsiOperator {
    pub s: f64,
    n: usize,
    weights: Vec<f64>,
}

impl PsiOperator {
    pub fn new(s: f64, table: &QuantileTable) -> Result<Self> {
        if !(s > 0.0) {
            return domain(format!("smoothing time must be positive, got {s}"));
        }
        let n = table.n;
        let c = (-0.5 * s).exp() / n as f64;
        let theta: Vec<f64> = table.gamma.iter().map(|&x| angle(x)).collect();
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let w = c * heat_kernel_angles(s, theta[i], theta[j]);
                weights[i * n + j] = w;
                weights[j * n + i] = w;
            }
        }
        Ok(Self { s, n, weights })
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return domain(format!("vector length {} != N = {}", v.len(), self.n));
        }
        Ok((0..self.n)
            .map(|i| {
                self.weights[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(v)
                    .map(|(w, x)| w * x)
                    .sum()
            })
            .collect())
    }

    /// `max_i sum_j` of the operator weights, i.e. its `l^inf` norm.
    pub fn row_sum_max(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.weights[i * self.n..(i + 1) * self.n]
                    .iter()
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Applies `Psi_s` to `v`; see [`PsiOperator`].
pub fn psi_apply(s: f64, v: &[f64], table: &QuantileTable) -> Result<Vec<f64>> {
    if v.len() != table.n {
        return domain(format!("vector length {} != N = {}", v.len(), table.n));
    }
    PsiOperator::new(s, table)?.apply(v)
}

/// `(U v)_j = sum_{i != j} (v_j - v_i) / (N (gamma_i - gamma_j)^2)`.
pub fn discrete_u(v: &[f64], table: &QuantileTable) -> Result<Vec<f64>> {
    let n = table.n;
    if v.len() != n {
        return domain(format!("vector length {} != N = {}", v.len(), n));
    }
    let g = &table.gamma;
    Ok((0..n)
        .map(|j| {
            let mut acc = 0.0;
            for i in 0..n {
                if i != j {
                    let d = g[i] - g[j];
                    acc += (v[j] - v[i]) / (n as f64 * d * d);
                }
            }
            acc
        })
        .collect())
}

/// `sum_{k != 0} (1 - cos(kp)) / k^2 = pi |p| - p^2/2` on `[-pi, pi]`.
pub fn lattice_symbol(p: f64) -> f64 {
    let a = p.abs();
    PI * a - 0.5 * a * a
}

/// Leading constant of [`lattice_symbol`] near `p = 0`.
pub const LATTICE_SYMBOL_CONSTANT: f64 = PI;

/// `(2 pi)^{-1} ∫_{-pi}^{pi} e^{-t c0 N |p|} e^{-ikp} dp`
/// `= (1/(pi N)) c0 t / ((c0 t)^2 + (k/N)^2) (1 - (-1)^k e^{-pi c0 t N})`.
pub fn translation_invariant_kernel(t: f64, k: i64, n: usize, c0: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("kernel time must be positive, got {t}"));
    }
    let nf = n as f64;
    let a = c0 * t;
    let kn = k as f64 / nf;
    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let tail = sign * (-PI * a * nf).exp();
    Ok(a * (1.0 - tail) / (PI * nf * (a * a + kn * kn)))
}

/// Largest `||f||_{rho,3}^2 / <f, K f>_rho` over random mean-zero `f` in
/// `span{P_1, ..., P_deg}`.
///
/// `<f, K f> = sum_n c_n^2 n / 2` by the diagonalization; the `L^3` norm is
/// computed with `rule`.
pub fn sobolev_constant(coeffs: &[Vec<f64>], rule: &SemicircleRule) -> f64 {
    let deg = coeffs.iter().map(|c| c.len()).max().unwrap_or(0);
    let basis: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| cheb_p_all(deg, x)).collect();
    coeffs
        .iter()
        .map(|c| {
            let form: f64 = c
                .iter()
                .enumerate()
                .map(|(k, a)| a * a * (k + 1) as f64 / 2.0)
                .sum();
            let l3: f64 = basis
                .iter()
                .zip(&rule.weights)
                .map(|(b, w)| {
                    let f: f64 = c.iter().enumerate().map(|(k, a)| a * b[k + 1]).sum();
                    w * f.abs().powi(3)
                })
                .sum::<f64>()
                .cbrt();
            l3 * l3 / form
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_base_cases() {
        assert_eq!(cheb_p(0, 0.3), 1.0);
        assert_eq!(cheb_p(1, 0.3), 0.3);
        assert!((cheb_p(2, 0.5) + 0.75).abs() < 1e-15);
        let th: f64 = 1.1;
        let x = 2.0 * th.cos();
        assert!((cheb_p(5, x) - (6.0 * th).sin() / th.sin()).abs() < 1e-12);
    }

    #[test]
    fn derivative_recursion() {
        for n in 0..8 {
            let x = 0.37;
            let fd = (cheb_p(n, x + 1e-6) - cheb_p(n, x - 1e-6)) / 2e-6;
            let (d1, d2) = cheb_p_derivatives(n, x);
            assert!((d1 - fd).abs() < 1e-7, "n={n}");
            let fd2 =
                (cheb_p_derivatives(n, x + 1e-6).0 - cheb_p_derivatives(n, x - 1e-6).0) / 2e-6;
            assert!((d2 - fd2).abs() < 1e-6, "n={n}");
        }
    }

    #[test]
    fn edge_rejected_by_k() {
        let f = TestFunction::identity();
        assert!(apply_k(&f, 1.99999999, 4000).is_err());
        assert!(apply_k(&f, 2.0, 4000).is_err());
    }

    #[test]
    fn series_at_nmax_zero() {
        let (s, _) = heat_kernel_series(0.5, 0.1, 0.9, 0).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn kernel_is_symmetric_as_evaluated() {
        for &(x, y) in &[(0.3, -0.7), (1.9, -1.2), (0.0, 0.001)] {
            let a = heat_kernel(0.37, x, y).unwrap();
            let b = heat_kernel(0.37, y, x).unwrap();
            assert_eq!(a, b);
        }
    }
}

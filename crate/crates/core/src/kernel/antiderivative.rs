//! The antiderivative `P_s(gamma) = ∫_{gamma_{i0}}^{gamma} p_s(gamma_{i0}, x) dx`.
//!
//! On `[-2, 2]` the integral has the closed form
//!
//! ```text
//! A(y) = [L(theta + phi) + L(theta - phi)] / (q sin theta),
//! L(a) = atan2(q sin a, 1 - q cos a),  q = e^{-s/2},
//! ```
//!
//! with `gamma_{i0} = 2 cos theta` and `y = 2 cos phi`. Beyond `+-2` the kernel
//! is continued linearly in `y`, which makes `P_s` quadratic on `2 <= |y| <= 3`;
//! on `3 <= |y| <= 4` a cubic Hermite segment brings value and slope to zero.

use std::f64::consts::PI;

use serde::Serialize;

use super::heat::{angle, heat_kernel_angles, heat_kernel_dy};
use crate::error::{domain, Result};
use crate::func::TestFunction;
use crate::semicircle::QuantileTable;

#[derive(Debug, Clone, Copy, Serialize)]
struct EdgeData {
    value: f64,
    slope: f64,
    curvature: f64,
    taper_value: f64,
    taper_slope: f64,
}

/// `P_s` anchored at `gamma_{i0}`, `i0 = min{i : gamma_i >= E}`.
#[derive(Debug, Clone, Serialize)]
pub struct AntiderivativeP {
    pub s: f64,
    pub energy: f64,
    /// Zero-based anchor index.
    pub i0: usize,
    pub anchor: f64,
    theta: f64,
    q: f64,
    base: f64,
    right: EdgeData,
    left: EdgeData,
}

impl AntiderivativeP {
    pub fn new(s: f64, energy: f64, table: &QuantileTable) -> Result<Self> {
        if !(s > 0.0) {
            return domain(format!("kernel time must be positive, got {s}"));
        }
        if !(energy.abs() < 2.0) {
            return domain(format!("energy {energy} is not in the bulk"));
        }
        let i0 = match table.first_at_or_above(energy) {
            Some(k) => k,
            None => return domain(format!("no typical location at or above {energy}")),
        };
        let anchor = table.gamma[i0];
        let theta = angle(anchor);
        let q = (-0.5 * s).exp();
        let mut p = Self {
            s,
            energy,
            i0,
            anchor,
            theta,
            q,
            base: 0.0,
            right: EdgeData {
                value: 0.0,
                slope: 0.0,
                curvature: 0.0,
                taper_value: 0.0,
                taper_slope: 0.0,
            },
            left: EdgeData {
                value: 0.0,
                slope: 0.0,
                curvature: 0.0,
                taper_value: 0.0,
                taper_slope: 0.0,
            },
        };
        p.base = p.closed_form(theta);
        p.right = p.edge(2.0);
        p.left = p.edge(-2.0);
        Ok(p)
    }

    fn closed_form(&self, phi: f64) -> f64 {
        let q = self.q;
        let l = |a: f64| (q * a.sin()).atan2(1.0 - q * a.cos());
        (l(self.theta + phi) + l(self.theta - phi)) / (q * self.theta.sin())
    }

    fn edge(&self, y: f64) -> EdgeData {
        let phi = if y > 0.0 { 0.0 } else { PI };
        let value = self.closed_form(phi) - self.base;
        let slope = heat_kernel_angles(self.s, self.theta, phi);
        let curvature = heat_kernel_dy(self.s, self.anchor, y);
        let sign = y.signum();
        let taper_value = value + sign * slope + 0.5 * curvature;
        let taper_slope = slope + sign * curvature;
        EdgeData {
            value,
            slope,
            curvature,
            taper_value,
            taper_slope,
        }
    }

    /// `(P_s, P_s', P_s'')` at `gamma`.
    pub fn eval_all(&self, gamma: f64) -> (f64, f64, f64) {
        let a = gamma.abs();
        if a > 4.0 {
            return (0.0, 0.0, 0.0);
        }
        if a <= 2.0 {
            let phi = angle(gamma);
            return (
                self.closed_form(phi) - self.base,
                heat_kernel_angles(self.s, self.theta, phi),
                heat_kernel_dy(self.s, self.anchor, gamma),
            );
        }
        let (e, sign) = if gamma > 0.0 {
            (&self.right, 1.0)
        } else {
            (&self.left, -1.0)
        };
        if a <= 3.0 {
            let u = gamma - sign * 2.0;
            return (
                e.value + e.slope * u + 0.5 * e.curvature * u * u,
                e.slope + e.curvature * u,
                e.curvature,
            );
        }
        // Hermite segment in u = |gamma| - 3, slopes taken along |gamma|.
        let u = a - 3.0;
        let m = sign * e.taper_slope;
        let h00 = 2.0 * u * u * u - 3.0 * u * u + 1.0;
        let h10 = u * u * u - 2.0 * u * u + u;
        let d00 = 6.0 * u * u - 6.0 * u;
        let d10 = 3.0 * u * u - 4.0 * u + 1.0;
        let s00 = 12.0 * u - 6.0;
        let s10 = 6.0 * u - 4.0;
        let v = e.taper_value * h00 + m * h10;
        let dv = e.taper_value * d00 + m * d10;
        let ddv = e.taper_value * s00 + m * s10;
        (v, sign * dv, ddv)
    }

    pub fn value(&self, gamma: f64) -> f64 {
        self.eval_all(gamma).0
    }

    pub fn as_test_function(&self) -> TestFunction {
        let (a, b, c) = (self.clone(), self.clone(), self.clone());
        TestFunction::new(
            format!("P_s(s={}, E={})", self.s, self.energy),
            move |x| a.eval_all(x).0,
            move |x| b.eval_all(x).1,
            move |x| c.eval_all(x).2,
        )
        .with_support(-4.0, 4.0)
    }

    /// Smallest constants in
    /// `|P| <= C`, `P' <= C s / (s^2 + u^2)`, `|P''| <= C s |u| / (s^4 + u^4)`
    /// with `u = gamma_{i0} - gamma`, over `points` grid points in `[-4, 4]`.
    /// Derivatives are central differences of `P`.
    pub fn bound_constants(&self, points: usize) -> AntiderivativeBounds {
        let s = self.s;
        let h1 = 1e-6;
        let h2 = 1e-4;
        let mut out = AntiderivativeBounds {
            c_sup: 0.0,
            c_first: 0.0,
            c_second: 0.0,
        };
        for k in 0..points {
            let g = -4.0 + 8.0 * (k as f64 + 0.5) / points as f64;
            let p = self.value(g);
            let d1 = (self.value(g + h1) - self.value(g - h1)) / (2.0 * h1);
            let d2 = (self.value(g + h2) - 2.0 * p + self.value(g - h2)) / (h2 * h2);
            let u = self.anchor - g;
            out.c_sup = out.c_sup.max(p.abs());
            out.c_first = out.c_first.max(d1 * (s * s + u * u) / s);
            if u.abs() > 10.0 * h2 {
                out.c_second = out
                    .c_second
                    .max(d2.abs() * (s.powi(4) + u.powi(4)) / (s * u.abs()));
            }
        }
        out
    }
}

/// Measured constants in the sup, first and second derivative bounds of `P_s`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AntiderivativeBounds {
    pub c_sup: f64,
    pub c_first: f64,
    pub c_second: f64,
}

/// `P_s(gamma)` with the support convention `P_s = 0` for `|gamma| > 4`.
pub fn antiderivative_p(s: f64, gamma: f64, energy: f64, table: &QuantileTable) -> Result<f64> {
    Ok(AntiderivativeP::new(s, energy, table)?.value(gamma))
}

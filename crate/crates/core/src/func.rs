//! Twice differentiable test functions.

use std::fmt;
use std::sync::Arc;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function together with its first two derivatives.
#[derive(Clone)]
pub struct TestFunction {
    f: Scalar,
    d1: Scalar,
    d2: Scalar,
    /// Closed interval outside which the function is constant, if any.
    pub support: Option<(f64, f64)>,
    pub label: String,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("support", &self.support)
            .finish()
    }
}

impl TestFunction {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(f),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            support: None,
            label: label.into(),
        }
    }

    pub fn with_support(mut self, lo: f64, hi: f64) -> Self {
        self.support = Some((lo, hi));
        self
    }

    /// Polynomial with coefficients in increasing degree.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let c: Vec<f64> = coeffs.to_vec();
        let c1: Vec<f64> = c
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| k as f64 * a)
            .collect();
        let c2: Vec<f64> = c1
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| k as f64 * a)
            .collect();
        Self::new(
            format!("poly{:?}", coeffs),
            move |x| horner(&c, x),
            move |x| horner(&c1, x),
            move |x| horner(&c2, x),
        )
    }

    pub fn constant(value: f64) -> Self {
        Self::new("const", move |_| value, |_| 0.0, |_| 0.0)
    }

    pub fn identity() -> Self {
        Self::polynomial(&[0.0, 1.0])
    }

    pub fn square() -> Self {
        Self::polynomial(&[0.0, 0.0, 1.0])
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }

    #[inline]
    pub fn d2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let p = TestFunction::polynomial(&[1.0, -2.0, 0.5, 1.0]);
        let x = 0.7;
        assert!((p.value(x) - (1.0 - 1.4 + 0.5 * 0.49 + 0.343)).abs() < 1e-15);
        assert!((p.d1(x) - (-2.0 + x + 3.0 * x * x)).abs() < 1e-15);
        assert!((p.d2(x) - (1.0 + 6.0 * x)).abs() < 1e-15);
    }
}

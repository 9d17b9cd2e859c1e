//! Partition of unity subordinate to the typical locations.
//!
//! Bumps with even one-based label `j` equal 1 on a plateau around `gamma_j`
//! and vanish near `gamma_{j-1}` and `gamma_{j+1}`; each half-cell carries
//! `rho`-mass `1/(2N)`. Odd-labelled bumps are the complements, so
//! `sum_j xi_j = 1` and `∫ xi_j dρ = 1/N` for every `j`.
//!
//! Each half of an even bump is a rescaled cubic smoothstep. Its ramp moves
//! along a one-parameter path (first stretching away from the outer margin,
//! then sliding towards the plateau) on which the half-cell mass decreases
//! monotonically; bisection on the path enforces the mass condition.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::quad::GaussLegendre;
use crate::semicircle::{cdf, density, QuantileTable};

/// Plateau and margin size relative to the local gap.
pub const PLATEAU_FRACTION: f64 = 0.01;

const MASS_NODES: usize = 24;
const MASS_PIECES: usize = 4;

#[inline]
fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Monotone ramp: 0 below `lo` and 1 above `hi` when rising, mirrored otherwise.
#[derive(Debug, Clone, Copy, Serialize)]
struct Ramp {
    lo: f64,
    hi: f64,
    rising: bool,
}

impl Ramp {
    #[inline]
    fn eval(&self, x: f64) -> f64 {
        let up = if x <= self.lo {
            0.0
        } else if x >= self.hi {
            1.0
        } else {
            smoothstep((x - self.lo) / (self.hi - self.lo))
        };
        if self.rising {
            up
        } else {
            1.0 - up
        }
    }

    /// `∫_{cell_lo}^{cell_hi} ramp dρ`.
    fn mass(&self, cell_lo: f64, cell_hi: f64, gl: &GaussLegendre) -> f64 {
        let ramp = if self.hi > self.lo {
            let h = (self.hi - self.lo) / MASS_PIECES as f64;
            let breaks: Vec<f64> = (0..=MASS_PIECES).map(|k| self.lo + k as f64 * h).collect();
            gl.integrate_pieces(|x| self.eval(x) * density(x), &breaks)
        } else {
            0.0
        };
        let flat = if self.rising {
            cdf(cell_hi) - cdf(self.hi)
        } else {
            cdf(self.lo) - cdf(cell_lo)
        };
        ramp + flat
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct EvenBump {
    left: Ramp,
    right: Option<Ramp>,
}

/// Partition of unity `xi_1, ..., xi_N` built from a quantile table.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionOfUnity {
    pub table: QuantileTable,
    /// Indexed by zero-based position; `Some` for even one-based labels.
    bumps: Vec<Option<EvenBump>>,
}

impl PartitionOfUnity {
    pub fn new(table: &QuantileTable) -> Result<Self> {
        let n = table.n;
        if n < 2 {
            return domain("partition of unity needs N >= 2");
        }
        let g = &table.gamma;
        let gl = GaussLegendre::new(MASS_NODES);
        let target = 0.5 / n as f64;
        let mut bumps = vec![None; n];
        for k in (1..n).step_by(2) {
            let mut margin = table.local_gap(k);
            margin = margin.max(table.local_gap(k - 1));
            if k + 1 < n {
                margin = margin.max(table.local_gap(k + 1));
            }
            margin *= PLATEAU_FRACTION;
            let left = solve_half(g[k - 1], g[k], margin, true, target, &gl)?;
            let right = if k + 1 < n {
                Some(solve_half(g[k], g[k + 1], margin, false, target, &gl)?)
            } else {
                None
            };
            bumps[k] = Some(EvenBump { left, right });
        }
        Ok(Self {
            table: table.clone(),
            bumps,
        })
    }

    pub fn n(&self) -> usize {
        self.table.n
    }

    fn even(&self, k: usize, x: f64) -> f64 {
        let b = self.bumps[k].as_ref().expect("even bump");
        if x < self.table.gamma[k] {
            b.left.eval(x)
        } else {
            match &b.right {
                Some(r) => r.eval(x),
                None => 1.0,
            }
        }
    }

    /// `xi_k(x)` for zero-based `k`.
    pub fn xi(&self, k: usize, x: f64) -> f64 {
        let n = self.table.n;
        let g = &self.table.gamma;
        if self.bumps[k].is_some() {
            return self.even(k, x);
        }
        if x < g[k] {
            if k == 0 {
                1.0
            } else if x < g[k - 1] {
                0.0
            } else {
                1.0 - self.even(k - 1, x)
            }
        } else if k + 1 == n {
            1.0
        } else if x > g[k + 1] {
            0.0
        } else {
            1.0 - self.even(k + 1, x)
        }
    }

    /// Support interval of `xi_k`, with infinite ends at the boundary.
    pub fn support(&self, k: usize) -> (f64, f64) {
        let n = self.table.n;
        match &self.bumps[k] {
            Some(b) => (b.left.lo, b.right.map(|r| r.hi).unwrap_or(f64::INFINITY)),
            None => {
                let lo = if k == 0 {
                    f64::NEG_INFINITY
                } else {
                    self.bumps[k - 1]
                        .and_then(|b| b.right)
                        .map(|r| r.lo)
                        .unwrap()
                };
                let hi = if k + 1 == n {
                    f64::INFINITY
                } else {
                    self.bumps[k + 1].map(|b| b.left.hi).unwrap()
                };
                (lo, hi)
            }
        }
    }

    /// `e_v(x) = sum_j xi_j(x) v_j`, using that at most two bumps overlap.
    pub fn extend(&self, v: &[f64], x: f64) -> Result<f64> {
        let n = self.table.n;
        if v.len() != n {
            return domain(format!("vector length {} != N = {}", v.len(), n));
        }
        let g = &self.table.gamma;
        if x < g[0] {
            return Ok(v[0]);
        }
        if x >= g[n - 1] {
            return Ok(v[n - 1]);
        }
        let k = g.partition_point(|&y| y <= x) - 1;
        Ok(self.xi(k, x) * v[k] + self.xi(k + 1, x) * v[k + 1])
    }
}

/// Ramp on the half-cell `[a, b]` with outer margin and plateau `margin`.
fn solve_half(
    a: f64,
    b: f64,
    margin: f64,
    rising: bool,
    target: f64,
    gl: &GaussLegendre,
) -> Result<Ramp> {
    let (outer, inner) = if rising {
        (a + margin, b - margin)
    } else {
        (b - margin, a + margin)
    };
    let ramp_at = |lambda: f64| {
        let (o, i) = if lambda <= 1.0 {
            (outer, outer + lambda * (inner - outer))
        } else {
            (outer + (lambda - 1.0) * (inner - outer), inner)
        };
        if rising {
            Ramp {
                lo: o,
                hi: i,
                rising,
            }
        } else {
            Ramp {
                lo: i,
                hi: o,
                rising,
            }
        }
    };
    let mass = |lambda: f64| ramp_at(lambda).mass(a, b, gl);
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    if mass(lo) < target || mass(hi) > target {
        return domain(format!(
            "cannot meet the half-cell mass condition on [{a}, {b}]"
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(ramp_at(0.5 * (lo + hi)))
}

/// `xi_j(x)` for zero-based `j`.
pub fn partition_xi(pou: &PartitionOfUnity, j: usize, x: f64) -> f64 {
    pou.xi(j, x)
}

/// `e_v(x) = sum_j v_j xi_j(x)`.
pub fn extend_vector(pou: &PartitionOfUnity, v: &[f64], x: f64) -> Result<f64> {
    pou.extend(v, x)
}

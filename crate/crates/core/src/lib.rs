//! Numerical laboratory for Dyson Brownian motion and the local statistics
//! of generalized Wigner matrices.
//!
//! - [`ensembles`]: matrix sampling, the matrix Ornstein-Uhlenbeck flow, eigenvalues.
//! - [`semicircle`]: density, quantiles, Stieltjes transform, rigidity.
//! - [`kernel`]: the operator `K`, heat kernel `p_t`, smoothing operator, partition of unity.
//! - [`dynamics`]: DBM integrators, coupled flows, the parabolic equation and its diagnostics.
//! - [`stats`]: local observables, gaps, linear statistics and the CLT functionals.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ensembles;
pub mod error;
pub mod func;
pub mod kernel;
pub mod quad;
pub mod rng;
pub mod semicircle;
pub mod stats;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Coupled and regularized Dyson Brownian motion and the discrete parabolic
//! equation satisfied by the difference of a coupled pair.
//!
//! ```text
//! dx_l = sqrt(2/N) dB_l + (N^{-1} sum_{k != l} 1/(x_l - x_k) - x_l/2) dt
//! delta_l(t) = e^{t/2} (x_l(t) - y_l(t))
//! d delta_l / dt = sum_{k != l} b_kl (delta_k - delta_l),
//!     b_kl = 1/(N (x_l - x_k)(y_l - y_k))
//! ```

mod dbm;
mod homogenization;
mod parabolic;

pub use dbm::*;
pub use homogenization::*;
pub use parabolic::*;

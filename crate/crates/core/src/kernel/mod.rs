//! Deterministic closed-form and quadrature-based functions.

pub mod conditional;
pub mod covariance;
pub mod density;
pub mod expansion;
pub mod normal;
pub mod quadrature;

pub use conditional::{p1, p2, psi, walk_params, JumpQuery, WalkParams};
pub use covariance::{increment_variance, limit_covariance};
pub use density::{median_density, tail_bound_check};
pub use expansion::{p1_expansion, psi_expansion, ExpansionResult};
pub use normal::{mills_upper_bound, std_normal_cdf};

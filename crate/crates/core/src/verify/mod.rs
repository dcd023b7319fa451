//! Statistical checks that tie the simulations to the analytic results.

pub mod checks;
pub mod report;
pub mod stats;
pub mod suite;

pub use checks::{
    verify_cond_inequality, verify_expansion_certificates, verify_key_estimate, verify_split_bound, CheckConfig,
};
pub use report::{Lhs, VerificationReport};
pub use suite::{run_acceptance, run_acceptance_with_determinism, AcceptanceRun};

use thiserror::Error;

/// Errors raised by the kernel, simulators and verifiers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("quadrature did not converge on [{lo}, {hi}]: error estimate {err_est:e} after {intervals} subintervals ({evals} evaluations)")]
    Quadrature {
        lo: f64,
        hi: f64,
        err_est: f64,
        intervals: usize,
        evals: usize,
    },

    #[error("exact distribution requested for k = {k} steps, above the cap of {cap}; use the Monte Carlo estimator instead")]
    StepCapExceeded { k: usize, cap: usize },

    #[error("covariance matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("Cholesky factorization failed with jitter up to {max_jitter:e} (trace {trace:e}, dimension {dim})")]
    Factorization {
        max_jitter: f64,
        trace: f64,
        dim: usize,
    },

    #[error("delta = {delta:e} exceeds the configured delta0 = {delta0:e}")]
    DeltaAboveThreshold { delta: f64, delta0: f64 },

    #[error("sample size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

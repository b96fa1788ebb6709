use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    Convergence { residual: f64, iterations: usize },

    #[error("truncation too small: expected jump count {expected:e} exceeds {limit:e}")]
    TruncationTooSmall { expected: f64, limit: f64 },

    #[error("integrator inconsistency: {disagreements} of {audited} audited paths disagree")]
    IntegratorInconsistency { disagreements: usize, audited: usize },

    #[error("solver failed on {failures} of {n} samples")]
    SolverFailures { failures: u64, n: u64 },

    #[error("argmin empty within cost bound {bound}")]
    ArgminEmpty { bound: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing config key `{0}`")]
    MissingKey(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

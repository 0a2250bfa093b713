use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum FocklineError {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical invariant that must hold by construction was violated.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// The operation needs a unit-trace operator.
    #[error("operator is not normalized (trace = {trace})")]
    NotNormalized { trace: f64 },

    /// The requested state is degenerate (no entangled support survives).
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, FocklineError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FocklineError::Domain(msg.into()))
}

use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two inputs that must agree (dimension, basis, realization size) do not.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The requested computation exceeds a configured resource limit.
    #[error("resource limit: {0}")]
    Resource(String),

    /// An eigendecomposition failed or did not meet its certification tolerance.
    #[error("spectral certification failed: {message} (worst residual {residual:.3e})")]
    Certification { message: String, residual: f64 },

    /// A requested feature (e.g. a threshold crossing) is not present in the data.
    #[error("not found: {0}")]
    NotFound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

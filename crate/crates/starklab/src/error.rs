use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error)]
pub enum StarkError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("zero of the model within tolerance of the window boundary near {re:.6} {im:+.6}i")]
    BoundaryZero { re: f64, im: f64 },
    #[error("precision fault: {0}")]
    Precision(String),
    #[error("normalization fault: W(psi+*, psi+) = {re:.3e} {im:+.3e}i, expected 2i")]
    Normalization { re: f64, im: f64 },
    #[error("endpoint error: {0}")]
    Endpoint(String),
    #[error("subdivision depth exhausted with {unresolved} unresolved cell(s)")]
    DepthExceeded { unresolved: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, StarkError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(StarkError::Domain(msg.into()))
}

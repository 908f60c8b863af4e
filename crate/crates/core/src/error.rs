use thiserror::Error;

/// Errors raised across the forward, inverse and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(
        "wavenumber k = {wavenumber} is within the resonance guard of the Neumann eigenvalue {eigenvalue} (eigenwavenumber {eigenwavenumber})"
    )]
    Resonance {
        wavenumber: f64,
        eigenvalue: f64,
        eigenwavenumber: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("argument count mismatch: order {order} needs {order} arguments, got {found}")]
    ArgumentCount { order: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {})", .residuals.last().copied().unwrap_or(f64::NAN))]
    NonConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("forward solve failed for source {source_index} (k = {wavenumber}, scale = {scale}): {reason}")]
    ForwardFailure {
        source_index: usize,
        wavenumber: f64,
        scale: f64,
        reason: String,
    },

    #[error("nu sequence overflows floating point beyond order {largest_safe}")]
    Overflow { largest_safe: usize },

    #[error("degenerate matrix: {0}")]
    Degenerate(String),

    #[error("too many compositions: order {order} exceeds the configured limit {limit}")]
    CompositionLimit { order: usize, limit: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the failure is mathematical (non-convergence) rather than a usage problem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::ForwardFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

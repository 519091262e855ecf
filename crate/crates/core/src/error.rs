use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("symmetric eigendecomposition of a {dim}x{dim} matrix did not converge (max |entry| = {max_abs:e})")]
    EigenFailure { dim: usize, max_abs: f64 },

    #[error("non-finite value produced by the {step} step at iteration {iteration}")]
    NonFinite {
        step: &'static str,
        iteration: usize,
    },

    #[error("no feasible candidate among {0} hyperparameter settings")]
    NoFeasibleCandidate(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Failures that come from the arithmetic rather than from malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::EigenFailure { .. } | Error::NotPositiveDefinite(_)
        )
    }
}

// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated its precondition (bounds, finiteness, counts).
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A protocol segment is out of the admissible box or malformed.
    #[error("segment {index}: {reason}")]
    InvalidSegment { index: usize, reason: String },

    /// The state vector is not normalized.
    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    /// The Jacobi eigensolver did not converge.
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    /// A root search found no sign change where one was required.
    #[error("no root: {0}")]
    NoRoot(String),

    /// A bisection bracket could not be established.
    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter { .. }
            | Error::InvalidSegment { .. }
            | Error::NotNormalized { .. }
            | Error::Json(_) => ErrorKind::Validation,
            Error::EigenNoConvergence { .. } | Error::NoRoot(_) | Error::Bracket(_) => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}

// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::fitting::FitResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A query falls outside the sampled range of a spectrum.
    #[error("range error: {0}")]
    Range(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A type invariant was violated while constructing a value.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// The optimizer could not produce a usable step. `last` holds the last
    /// accepted iterate.
    #[error("fit failed after {iterations} iterations: {message}")]
    FitFailure {
        message: String,
        iterations: usize,
        last: Box<FitResult>,
    },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("numerical failure: {message} (relative residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}

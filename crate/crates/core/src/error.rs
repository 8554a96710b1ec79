use std::path::PathBuf;

use crate::pipeline::EnhanceReport;

/// Errors produced anywhere in the enhancement pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The input image has the wrong color space, shape or contents.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A tunable is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Reading or writing a file failed.
    #[error("{}: {reason}", path.display())]
    Io { path: PathBuf, reason: String },

    /// The illumination solve did not reach the requested tolerance.
    ///
    /// `report` is filled in when the failure happened inside [`crate::enhance`].
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        residual: f64,
        iterations: usize,
        report: Option<Box<EnhanceReport>>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Io {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    /// Short stable identifier, used by the CLI for greppable diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::Io { .. } => "io",
            Error::NotConverged { .. } => "not-converged",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation. `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("length mismatch: expected {expected} sites, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite amplitude at site {site} after step {step}")]
    NonFinite { site: usize, step: usize },

    #[error("boundary contamination at step {step}: density {density:e} at site {site}")]
    BoundaryContamination {
        step: usize,
        site: usize,
        density: f64,
    },

    #[error("no probability in sites {start}..{end}")]
    EmptyRegion { start: usize, end: usize },

    #[error("tridiagonal system is not diagonally dominant at row {row}")]
    NotDiagonallyDominant { row: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

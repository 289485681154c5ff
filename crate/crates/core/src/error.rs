use std::path::PathBuf;

use thiserror::Error;

use crate::data::DataError;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector lengths, class counts or view counts disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Two opinions put all of their belief mass on disjoint classes.
    #[error("total conflict between opinions (conflict mass {conflict})")]
    TotalConflict { conflict: f64 },

    /// An opinion with zero uncertainty has no finite Dirichlet counterpart.
    #[error("singular opinion: {0}")]
    Singularity(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A cached forward pass does not belong to the parameters it is used with.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Data(#[from] DataError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used for JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Dimension(_) => "dimension",
            Error::TotalConflict { .. } => "total_conflict",
            Error::Singularity(_) => "singularity",
            Error::Unsupported(_) => "unsupported",
            Error::Argument(_) => "argument",
            Error::Contract(_) => "contract",
            Error::Data(_) => "data",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

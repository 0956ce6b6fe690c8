use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver failed for channel l = {l}: {reason}")]
    Eigensolver { l: usize, reason: String },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error(
        "Krylov subspace not converged at t = {t}: residual estimate {residual:e} with {dim} vectors"
    )]
    KrylovNotConverged { t: f64, residual: f64, dim: usize },

    #[error("propagation failed at t = {t}: {source}")]
    Propagation {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("configuration error at {0}")]
    Config(#[from] crate::config::ConfigError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors that stem from numerics rather than from the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Eigensolver { .. } | Error::KrylovNotConverged { .. } => true,
            Error::Propagation { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

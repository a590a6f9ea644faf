use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver toolkit.
///
/// Numerical breakdown inside a solve is not an error: it is recorded in the
/// trace as a divergence so experiment grids can keep going.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row {row} has nonpositive largest entry {value}")]
    DegenerateMatrix { row: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("Jacobi eigensolver did not converge (off-diagonal norm {off_norm:e})")]
    EigenNonConvergence { off_norm: f64 },

    #[error("empty column index set")]
    EmptyIndexSet,

    #[error("full-bound c strategy requires block information")]
    MissingBlockInfo,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unknown component id {id}")]
    UnknownComponent { id: u32 },

    #[error("component id {id} listed more than once in the manifest")]
    DuplicateComponent { id: u32 },

    #[error("manifest is missing the board component (id 0, named \"board\")")]
    MissingBoard,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "emissivity compensation failed at cell ({row}, {col}): \
         negative radicand (observed temperature inconsistent with emissivity or box temperature)"
    )]
    NegativeRadicand { row: usize, col: usize },

    #[error("inpainting needs at least one known cell, but every cell is marked unknown")]
    NoKnownCells,

    #[error("non-finite power at cell ({row}, {col})")]
    NonFinitePower { row: usize, col: usize },

    #[error("steady-state solve did not converge: max residual {max_residual:e} W after {iterations} iterations")]
    SolverDiverged {
        max_residual: f64,
        iterations: usize,
    },

    #[error("singular thermal system: no heat sink couples the board to the ambient")]
    SingularSystem,

    #[error("under-determined fit: {instances} instances for {parameters} trainable parameters")]
    UnderDetermined {
        instances: usize,
        parameters: usize,
    },

    #[error("no samples left after filtering")]
    NoSamples,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

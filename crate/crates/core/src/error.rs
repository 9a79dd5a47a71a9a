use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("too few points: got {got}, need at least {min}")]
    TooFewPoints { got: usize, min: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// `sigma_eps2 == 0`: the signal-to-noise ratio is unbounded.
    #[error("infinite signal-to-noise ratio (noise variance is zero)")]
    InfiniteSnr,

    /// Quantity diverges at the interpolation threshold alpha = 1.
    #[error("diverges at the interpolation threshold (alpha = {alpha})")]
    Divergent { alpha: f64 },

    #[error("training diverged at step {step} (loss = {loss})")]
    TrainingDiverged { step: usize, loss: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("IDX format error in {path}: expected magic {expected:#010x}, found {found:#010x}")]
    Format {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("IDX length error in {path}: expected {expected} bytes, found {found}")]
    Length {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("parse error in {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cell {cell} failed: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep failed: {failed} of {total} cells failed")]
    SweepFailed { failed: usize, total: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse failure classes, used by the command line for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Io,
    Numerical,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } | Error::Format { .. } | Error::Length { .. } | Error::Parse { .. } => {
                ErrorClass::Io
            }
            Error::Config(_) | Error::InvalidInput(_) | Error::Shape(_) | Error::TooFewPoints { .. } => {
                ErrorClass::Config
            }
            Error::Cell { source, .. } => source.class(),
            Error::Domain(_)
            | Error::InfiniteSnr
            | Error::Divergent { .. }
            | Error::TrainingDiverged { .. }
            | Error::Degenerate(_)
            | Error::SweepFailed { .. } => ErrorClass::Numerical,
        }
    }
}

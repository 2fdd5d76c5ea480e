use std::path::PathBuf;

use thiserror::Error;

use crate::model::SystemClass;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("linear analysis failed: {0}")]
    Analysis(String),

    #[error("coefficient class {0:?} cannot be integrated (needs a,c <= 0 and b,d >= 0)")]
    Unsupported(SystemClass),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no solitary wave: {0}")]
    NoSolitaryWave(String),

    #[error("fixed-point iteration did not converge at step {step} (residual {residual:e} after {iterations} iterations)")]
    NonConvergence {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("{failed} of {total} sweep cells failed")]
    SweepCells { failed: usize, total: usize },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("bad snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

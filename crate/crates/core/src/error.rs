use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("schema error: expected columns {expected:?}, found {found:?}")]
    Schema {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("row error at line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot split: {0}")]
    Split(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("non-finite value during training ({phase}) at epoch {epoch}, batch {batch}")]
    NonFinite {
        phase: &'static str,
        epoch: usize,
        batch: usize,
    },

    #[error("incompatible checkpoint version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    #[error("checkpoint parse error: {0}")]
    Parse(String),

    #[error("missing pattern class {0} in evaluation data")]
    MissingClass(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

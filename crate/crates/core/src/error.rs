use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, expected {expected:?}, got {got:?}")]
    Dimension {
        op: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("{0}: operation would produce an empty output")]
    EmptyOutput(&'static str),

    #[error("sequence has no time steps")]
    EmptySequence,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("filter design: {0}")]
    Design(String),

    #[error("series of length {len} is too short, need more than {min} samples")]
    Length { len: usize, min: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("cannot split dataset: {0}")]
    Split(String),

    #[error("cannot fit classifier: {0}")]
    Fit(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, expected: &[usize], got: &[usize]) -> Self {
        Error::Dimension {
            op,
            expected: expected.to_vec(),
            got: got.to_vec(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }
}

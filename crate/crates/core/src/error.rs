use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("EDF parse error at byte offset {offset}: {message}")]
    EdfHeader { offset: usize, message: String },

    #[error("EDF data error: {0}")]
    EdfData(String),

    #[error("EDF+ annotation error in data record {record}: {message}")]
    Annotation { record: usize, message: String },

    #[error("unsupported file: {0}")]
    Unsupported(String),

    #[error("channel '{0}' not found")]
    MissingChannel(String),

    #[error("montage error: {0}")]
    Montage(String),

    #[error("invalid filter: {0}")]
    Filter(String),

    #[error("invalid resampling ratio: {0}")]
    Resample(String),

    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("hypnogram error: {0}")]
    Hypnogram(String),

    #[error("schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },

    #[error("model error: {0}")]
    Model(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("code length {0} is not a power of two >= 2")]
    InvalidLength(usize),
    #[error("non-frozen count {count} out of range for code length {n} (need 0 < count < n)")]
    InvalidRate { n: usize, count: usize },
    #[error("non-frozen count {non_frozen} smaller than CRC length {r_crc}")]
    CrcLongerThanPayload { non_frozen: usize, r_crc: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("index {index} out of range for code length {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("duplicate frozen index {0}")]
    DuplicateIndex(usize),
    #[error("malformed line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid CRC specification: {0}")]
    InvalidCrc(String),
    #[error("noise standard deviation must be positive")]
    ZeroNoise,
    #[error("early-stopping metric needs at least 2 candidate metrics, got {0}")]
    TooFewMetrics(usize),
    #[error("failure bin is empty; cannot derive a threshold")]
    EmptyFailureBin,
    #[error("threshold table is empty")]
    EmptyTable,
    #[error("invalid threshold table: {0}")]
    InvalidTable(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no results to write")]
    EmptyResults,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}

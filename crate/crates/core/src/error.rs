use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate index {0} in row selection")]
    DuplicateIndex(usize),

    #[error("generator must not be empty")]
    EmptyGenerator,

    #[error("Toeplitz generator must have length 2N-1 = {expected}, got {got}")]
    ToeplitzGeneratorLength { expected: usize, got: usize },

    #[error("dense {rows}x{cols} matrix needs {bytes} bytes, budget is {budget}")]
    BudgetExceeded {
        rows: usize,
        cols: usize,
        bytes: usize,
        budget: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("certificate requires mu > 0 and sigma > 0 (mu = {mu}, sigma = {sigma})")]
    CertificateUndefined { mu: f64, sigma: f64 },

    #[error("certificate is not verified")]
    UnverifiedCertificate,

    #[error("dimension {n} exceeds the limit {limit} for this routine")]
    TooLarge { n: usize, limit: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

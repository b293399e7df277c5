use std::path::PathBuf;

/// Crate-wide error type. The CLI maps variants onto exit codes: anything
/// that is a configuration or validation problem exits 2, oracle/transport
/// failures exit 3, and non-convergence under `--strict` exits 4.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no suitable code for n={n}, t={t} within extension degree cap {max_m}")]
    CodeConstruction { n: usize, t: usize, max_m: usize },

    #[error("input length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dense transform capped at n <= {cap}, got n = {n}")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("basis enumeration needs {needed} columns, cap is {cap}; use the message-passing path")]
    ColumnCapExceeded { needed: usize, cap: usize },

    #[error("mask {0} not present in replay record")]
    MissingMask(String),

    #[error("oracle protocol error: {0}")]
    Protocol(String),

    #[error("oracle transport failure after {attempts} attempts: {last}")]
    Transport { attempts: usize, last: String },

    #[error("message passing did not converge within {rounds} rounds")]
    NonConvergence { rounds: usize },

    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {message}")]
    Json { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Json {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

/// Errors raised anywhere in the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },

    /// A loaded or constructed object violates one of its invariants.
    #[error("invalid {what}: {message}")]
    Validation { what: &'static str, message: String },

    #[error("row {row}: {column}: {message}")]
    Row {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// The design matrix is rank deficient.
    #[error("design matrix is rank deficient; aliased columns: {}", aliased.join(", "))]
    RankDeficient {
        aliased: Vec<String>,
        /// Each entry lists the columns taking part in one exact linear dependency.
        dependencies: Vec<Vec<String>>,
    },

    /// An internal invariant was broken. This is a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn validation(what: &'static str, message: impl Into<String>) -> Self {
        Error::Validation {
            what,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by a bug rather than by user input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the harness can report.
///
/// Variants fall into two classes: validation failures (bad input data or
/// arguments) and contract failures (an external translator process broke
/// the line protocol). [`Error::is_contract`] tells them apart.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: line {line}: {message}", path.display())]
    Malformed {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: line {line}: duplicate id {id:?}", path.display())]
    DuplicateId { path: PathBuf, line: u64, id: String },

    #[error("{}: line {line}: id {id:?} has label {label}, expected one of 0..{classes}", path.display())]
    InvalidLabel {
        path: PathBuf,
        line: u64,
        id: String,
        label: i64,
        classes: usize,
    },

    #[error("{}: line {line}: id {id:?} does not match any example", path.display())]
    UnknownId { path: PathBuf, line: u64, id: String },

    #[error("{}: no entry for id {id:?}", path.display())]
    MissingId { path: PathBuf, id: String },

    #[error("duplicate id {0:?}")]
    Duplicate(String),

    #[error("id sets differ: {0}")]
    IdMismatch(String),

    #[error("example {0:?} has no label")]
    Unlabeled(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("missing human score for id {id:?}, system {system:?}")]
    MissingScore { id: String, system: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("translator ({stage}): {message}")]
    Translator { stage: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }

    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// True when the failure came from an external process breaking its
    /// protocol rather than from bad input.
    pub fn is_contract(&self) -> bool {
        matches!(self, Error::Translator { .. })
    }
}

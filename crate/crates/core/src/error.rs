use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed delimited text. `line` is 1-based and counts the header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("time axis error at line {line}: {message}")]
    Ordering { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("series of length {len} cannot be decomposed into {levels} dyadic levels")]
    Level { len: usize, levels: usize },

    #[error("coefficient structure mismatch: {0}")]
    Structure(String),

    #[error("rank error: {0}")]
    Rank(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("structure function S_{level}({p}) is not positive")]
    NonPositive { level: usize, p: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numerical routines themselves, as opposed to
    /// bad input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::Rank(_)
                | Error::Estimation(_)
                | Error::NonPositive { .. }
                | Error::Linalg(_)
        )
    }

    /// Process exit code: 2 for validation failures, 3 for numerical
    /// failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Io { .. } => 1,
            _ if self.is_numerical() => 3,
            _ => 2,
        }
    }
}

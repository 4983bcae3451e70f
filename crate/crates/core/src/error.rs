use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("batch norm in train mode needs at least 2 samples, got {0}")]
    BatchSize(usize),

    #[error("invalid label: {0}")]
    Label(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("invalid landmark subset: {0}")]
    SubsetSpec(String),

    #[error("invalid contour spec: {0}")]
    ContourSpec(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("ingestion failed: {0}")]
    Ingestion(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("unknown embedding tap `{0}`")]
    Tap(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("weights archive: {0}")]
    Archive(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable category used by the command line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Dimension { .. } | Error::Shape(_) => "dimension",
            Error::Parameter(_) => "parameter",
            Error::BatchSize(_) => "batch-size",
            Error::Label(_) => "label",
            Error::Numeric(_) => "numeric",
            Error::SubsetSpec(_) | Error::ContourSpec(_) => "spec",
            Error::Input(_) => "input",
            Error::Ingestion(_) => "ingestion",
            Error::Protocol(_) => "protocol",
            Error::Config(_) => "config",
            Error::Tap(_) => "tap",
            Error::Parse { .. } => "parse",
            Error::Archive(_) => "archive",
            Error::Output { .. } => "output",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn dim(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Dimension {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] palsy_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    MissingCache(String),
}

impl CliError {
    /// Machine-readable category printed as `error[<category>]`.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.category(),
            CliError::Usage(_) => "usage",
            CliError::MissingCache(_) => "cache",
        }
    }

    /// The message on a single line.
    pub fn one_line(&self) -> String {
        self.to_string().split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

pub(crate) fn output_err(path: &std::path::Path, source: std::io::Error) -> CliError {
    CliError::Core(palsy_core::Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

use std::path::PathBuf;

use fujita_graph::error::ErrorCategory;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// TOML syntax, unknown keys, or an inconsistent config.
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fujita_graph::error::Error),

    #[error("malformed CSV: {0}")]
    MalformedCsv(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) => e.category().as_str(),
            CliError::MalformedCsv(_) => "malformed-input",
            CliError::Io { .. } => "io",
        }
    }

    /// Process exit code; 2 is left to argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Core(e) => match e.category() {
                ErrorCategory::InvalidParameter => 4,
                ErrorCategory::Parse => 5,
                ErrorCategory::GraphValidation => 6,
                ErrorCategory::InvalidInput => 7,
                ErrorCategory::Numerical => 8,
                ErrorCategory::Divergence => 9,
                ErrorCategory::Io => 10,
            },
            CliError::Io { .. } => 10,
            CliError::MalformedCsv(_) => 11,
        }
    }
}

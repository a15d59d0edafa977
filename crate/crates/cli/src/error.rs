use std::fmt;
use std::path::PathBuf;

/// Failure of a command, carrying its exit code class.
#[derive(Debug)]
pub enum CliError {
    /// Invalid flag or input, with the offending field.
    Config { field: &'static str, message: String },
    Numerical(replikit::Error),
    Io { path: Option<PathBuf>, source: std::io::Error },
}

impl CliError {
    pub fn config(field: &'static str, message: impl fmt::Display) -> Self {
        CliError::Config {
            field,
            message: message.to_string(),
        }
    }

    /// Classifies a library error raised while handling `field`.
    pub fn from_core(field: &'static str, err: replikit::Error) -> Self {
        if err.is_numerical() {
            CliError::Numerical(err)
        } else {
            CliError::config(field, err)
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { field, message } => write!(f, "{field}: {message}"),
            CliError::Numerical(err) => write!(f, "numerical failure: {err}"),
            CliError::Io { path: Some(p), source } => write!(f, "{}: {source}", p.display()),
            CliError::Io { path: None, source } => write!(f, "{source}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(source: std::io::Error) -> Self {
        CliError::Io { path: None, source }
    }
}

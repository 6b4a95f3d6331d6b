use thiserror::Error;

/// Process exit codes.
pub const EXIT_PREDICATE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Validation(_) => EXIT_VALIDATION,
            Self::Runtime(_) | Self::Io { .. } => EXIT_RUNTIME,
        }
    }

    /// Failure writing an output.
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    /// Failure reading an input, which counts as invalid input.
    pub fn read(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Validation(format!("{}: {}", path.display(), source))
    }
}

impl From<center_outward::Error> for CliError {
    fn from(e: center_outward::Error) -> Self {
        use center_outward::Error as E;
        match e {
            E::Domain(_) | E::Parameter(_) => Self::Validation(e.to_string()),
            E::Convergence(_) | E::Consistency(_) | E::Numerical(_) => Self::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

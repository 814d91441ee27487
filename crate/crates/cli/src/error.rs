use crate::config::ConfigErrors;

/// Failure of a CLI command, carrying its exit code class.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 1 for bad input, 2 for numerical failure, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    /// Classifies an error raised while setting a run up, before any output
    /// exists: anything that is not I/O or a numerical breakdown is bad input.
    pub fn setup(e: selflow::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }

    /// Prefixes the message with what was being processed.
    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Io(m) => CliError::Io(format!("{what}: {m}")),
            CliError::Validation(m) => CliError::Validation(format!("{what}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{what}: {m}")),
            other => other,
        }
    }

    /// Classifies an error raised while a validated run is in progress.
    pub fn running(e: selflow::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

use std::fmt;

/// Failures of the command-line driver, each with a stable code and exit status.
#[derive(Debug)]
pub enum CliError {
    /// Malformed configuration text or value.
    Parse { line: usize, column: usize, message: String },
    /// Well-formed configuration that is incomplete or inconsistent.
    Config(String),
    /// Hypothesis or acceptance checks failed.
    CheckFailed(String),
    Core(degenspec::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "E_PARSE",
            CliError::Config(_) => "E_CONFIG",
            CliError::CheckFailed(_) => "E_CHECK",
            CliError::Core(e) => e.code(),
            CliError::Io(_) => "E_IO",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Parse { .. } | CliError::Config(_) => 2,
            CliError::Core(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// One line: `error code=<CODE> [line=<l> column=<c>] message=<text>`.
    pub fn line(&self) -> String {
        let flat = |s: String| s.replace(['\n', '\r'], " ");
        match self {
            CliError::Parse { line, column, message } => {
                format!("error code={} line={line} column={column} message={}", self.code(), flat(message.clone()))
            }
            other => format!("error code={} message={}", self.code(), flat(other.to_string())),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse { line, column, message } => write!(f, "{line}:{column}: {message}"),
            CliError::Config(m) | CliError::CheckFailed(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<degenspec::Error> for CliError {
    fn from(e: degenspec::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

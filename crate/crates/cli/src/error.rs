use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("slope window violated:\n{}", .0.join("\n"))]
    Assertion(Vec<String>),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Assertion(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(3),
        }
    }
}

/// Library errors raised by a bad configuration count as usage errors;
/// everything else happened while computing.
impl From<truncq::Error> for CliError {
    fn from(e: truncq::Error) -> Self {
        match e {
            truncq::Error::Config(msg) => CliError::Config(msg.split("; ").map(str::to_owned).collect()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

/// Fails with every problem at once when the list is nonempty.
pub fn check(problems: Vec<String>) -> Result<(), CliError> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(problems))
    }
}

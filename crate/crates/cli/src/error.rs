use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error("{0}")]
    Prerequisite(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Prerequisite(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Validation(vec![message.into()])
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

use std::process::ExitCode;

/// Application error split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// Bad flags, unreadable or invalid scenario or spec. Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure while computing or writing results. Exit code 3.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        AppError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Config(_) => ExitCode::from(2),
            AppError::Runtime(_) => ExitCode::from(3),
        }
    }
}

impl From<e2boost_core::Error> for AppError {
    fn from(e: e2boost_core::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for AppError {
    fn from(e: csv::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

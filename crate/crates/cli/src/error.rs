use thiserror::Error;

/// Harness failures, split by exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Invalid or unreadable configuration; exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure while running an experiment or writing outputs; exit code 3.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Runtime(_) => 3,
        }
    }
}

impl From<genmetric_core::Error> for HarnessError {
    fn from(e: genmetric_core::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("NO_ROOT: {0}")]
    NoResult(String),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 0 success, 1 internal or failed checks, 2 config error, 3 no result.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoResult(_) => 3,
            CliError::ChecksFailed(_) | CliError::Internal(_) => 1,
        }
    }

    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn internal(e: impl std::fmt::Display) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub fn write_file(path: &std::path::Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))
}

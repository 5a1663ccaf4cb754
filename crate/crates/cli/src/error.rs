use carleson_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// 0 pass, 1 verification failure, 2 configuration error, 3 budget error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                CoreError::BudgetExceeded { .. } | CoreError::Overflow(_) => 3,
                CoreError::InvalidArgument(_) | CoreError::Format(_) | CoreError::Io(_) => 2,
                _ => 1,
            },
        }
    }
}

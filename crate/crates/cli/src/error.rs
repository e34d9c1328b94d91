use lca_haar_core::Error as CoreError;

/// Exit code for a completed run.
pub const EXIT_OK: i32 = 0;
/// Unreadable files and failed writes.
pub const EXIT_IO: i32 = 1;
/// Invalid configuration or input.
pub const EXIT_CONFIG: i32 = 2;
/// A resource guard stopped the computation.
pub const EXIT_RESOURCE: i32 = 3;
/// Two independent computations disagreed, or a self-test criterion failed.
pub const EXIT_SELF_CHECK: i32 = 4;
/// The self-test ran past its time budget.
pub const EXIT_BUDGET: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("self-check failed: {0}")]
    SelfCheck(String),
    #[error("time budget exceeded: {0}")]
    Budget(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Resource(_) => EXIT_RESOURCE,
            CliError::SelfCheck(_) => EXIT_SELF_CHECK,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::SupportLimit { .. } | CoreError::EnumerationLimit { .. } | CoreError::WindowLimit { .. } => {
                CliError::Resource(e.to_string())
            }
            CoreError::CheckpointMismatch { .. } | CoreError::InvalidInversion { .. } => {
                CliError::SelfCheck(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

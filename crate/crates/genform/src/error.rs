use genform_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("tolerance failure: {0}")]
    Tolerance(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 0 pass, 1 config error, 2 obstructed, 3 truncation, 4 tolerance failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Json(_) => 1,
            CliError::Tolerance(_) => 4,
            CliError::Core(e) => match e {
                CoreError::Obstructed { .. } => 2,
                CoreError::TruncationTooSmall { .. } => 3,
                CoreError::DimensionMismatch { .. }
                | CoreError::InvalidStructure(_)
                | CoreError::InvalidMetric
                | CoreError::NotClosed(_)
                | CoreError::ZeroCovector => 1,
                _ => 4,
            },
        }
    }
}

use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(perch_core::Error),
}

impl From<perch_core::Error> for LabError {
    fn from(e: perch_core::Error) -> Self {
        match e {
            perch_core::Error::Divergence { .. } | perch_core::Error::NumericalDivergence { .. } => {
                LabError::Divergence(e.to_string())
            }
            perch_core::Error::InvalidParameter { .. } => LabError::Config(e.to_string()),
            other => LabError::Core(other),
        }
    }
}

impl LabError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        LabError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for numerical divergence, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) => 2,
            LabError::Divergence(_) => 3,
            _ => 1,
        }
    }
}

impl From<&LabError> for ExitCode {
    fn from(e: &LabError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] wienerjam_core::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{cell}: {failures} consecutive ill-conditioned covariance estimates in trial {trial}")]
    TooManyRedraws { cell: String, trial: usize, failures: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn config_error(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

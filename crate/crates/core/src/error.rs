use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MaatError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MaatError {
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unknown {kind} id {id}")]
    Lookup { kind: &'static str, id: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("training diverged ({hyperparameter} = {value}): {message}")]
    Training {
        hyperparameter: &'static str,
        value: f64,
        message: String,
    },

    #[error("{strategy} cannot run on a {model} model")]
    Capability { strategy: String, model: String },

    #[error("instance too large: {0}")]
    Capacity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no selectable question left for examinee {examinee} at step {step}")]
    PoolExhausted { examinee: usize, step: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl MaatError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        MaatError::Contract(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        MaatError::Validation(msg.into())
    }
}

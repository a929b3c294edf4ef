//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid action index {index} (|A| = {n_actions})")]
    InvalidAction { index: usize, n_actions: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("transition {index} is inconsistent with the environment: {detail}")]
    InconsistentTransition { index: usize, detail: String },

    #[error("environment signature mismatch: expected {expected}, got {got}")]
    SignatureMismatch { expected: String, got: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

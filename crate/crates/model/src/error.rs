use thiserror::Error;

use crate::train::EpochRecord;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64, curve: Vec<EpochRecord> },
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl ModelError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;

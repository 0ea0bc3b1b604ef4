//! Residual deconvolutional generator that maps three sampled marginals to
//! three monochromatic images, with training and checkpoint IO.

pub mod blocks;
pub mod checkpoint;
pub mod error;
pub mod generator;
pub mod layers;
pub mod optim;
pub mod params;
pub mod real;
pub mod tensor;
pub mod train;

pub use error::{ModelError, Result};
pub use generator::{Generator, ModelConfig};
pub use train::{EpochRecord, StopReason, TrainConfig, TrainData, TrainState};

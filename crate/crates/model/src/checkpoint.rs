//! Checkpoint file: `QDGMCKPT`, u32 version, u64 header length, JSON
//! header, then little-endian f32 blobs (best weights, last weights, Adam
//! first and second moments), each in parameter order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::generator::{Generator, ModelConfig};
use crate::optim::Adam;
use crate::params::{Param, ParamStore};
use crate::train::{EpochRecord, StopReason, TrainConfig, TrainState};

pub const MAGIC: &[u8; 8] = b"QDGMCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ParamMeta {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    train: TrainConfig,
    dataset_digest: String,
    dataset_manifest: String,
    curve: Vec<EpochRecord>,
    params: Vec<ParamMeta>,
    epoch: usize,
    best_val: Option<f64>,
    best_epoch: usize,
    since_best: usize,
    stop: Option<StopReason>,
    adam_step: u64,
    adam_betas: [f64; 2],
    adam_eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Digest of the dataset manifest the model was trained on.
    pub dataset_digest: String,
    /// The manifest text itself, so prediction can recover feature scaling
    /// and the colour map.
    pub dataset_manifest: String,
    pub state: TrainState,
    /// Weights after the last completed epoch.
    pub current: ParamStore<f32>,
}

impl Checkpoint {
    pub fn new(model: &Generator<f32>, train: TrainConfig, dataset_digest: String, dataset_manifest: String, state: TrainState) -> Self {
        Self { model: model.config.clone(), train, dataset_digest, dataset_manifest, state, current: model.params.clone() }
    }

    /// Inference model with the best weights.
    pub fn generator(&self) -> Result<Generator<f32>> {
        Generator::from_params(self.model.clone(), self.state.best.clone())
    }

    /// Model with the last-epoch weights, for resuming.
    pub fn current_generator(&self) -> Result<Generator<f32>> {
        Generator::from_params(self.model.clone(), self.current.clone())
    }

    pub fn curve(&self) -> &[EpochRecord] {
        &self.state.curve
    }

    fn header(&self) -> Header {
        Header {
            model: self.model.clone(),
            train: self.train.clone(),
            dataset_digest: self.dataset_digest.clone(),
            dataset_manifest: self.dataset_manifest.clone(),
            curve: self.state.curve.clone(),
            params: self.current.params.iter().map(|p| ParamMeta { name: p.name.clone(), shape: p.shape.clone() }).collect(),
            epoch: self.state.epoch,
            best_val: self.state.best_val,
            best_epoch: self.state.best_epoch,
            since_best: self.state.since_best,
            stop: self.state.stop,
            adam_step: self.state.adam.step,
            adam_betas: [self.state.adam.beta1, self.state.adam.beta2],
            adam_eps: self.state.adam.eps,
        }
    }

    /// Writes to `<path>.partial` and renames into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = serde_json::to_vec(&self.header()).map_err(|e| ModelError::Format(e.to_string()))?;
        let tmp = partial_path(path);
        let write = || -> std::io::Result<()> {
            let mut w = BufWriter::new(File::create(&tmp)?);
            w.write_all(MAGIC)?;
            w.write_all(&VERSION.to_le_bytes())?;
            w.write_all(&(header.len() as u64).to_le_bytes())?;
            w.write_all(&header)?;
            let blobs = [
                self.state.best.params.iter().map(|p| p.value.as_slice()).collect::<Vec<_>>(),
                self.current.params.iter().map(|p| p.value.as_slice()).collect(),
                self.state.adam.m.iter().map(Vec::as_slice).collect(),
                self.state.adam.v.iter().map(Vec::as_slice).collect(),
            ];
            for blob in blobs.iter().flatten() {
                for v in blob.iter() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            w.into_inner().map_err(|e| e.into_error())?.sync_all()
        };
        if let Err(e) = write() {
            let _ = std::fs::remove_file(&tmp);
            return Err(ModelError::io(path, e));
        }
        std::fs::rename(&tmp, path).map_err(|e| ModelError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| ModelError::io(path, e))?;
        let bad = |msg: &str| ModelError::Format(format!("{}: {msg}", path.display()));
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(20..).ok_or_else(|| bad("truncated"))?;
        let header: Header = serde_json::from_slice(body.get(..hlen).ok_or_else(|| bad("truncated header"))?)
            .map_err(|e| bad(&e.to_string()))?;
        let data = &body[hlen..];
        let count: usize = header.params.iter().map(|p| p.shape.iter().product::<usize>()).sum();
        if data.len() != 4 * 4 * count {
            return Err(bad(&format!("expected {} weight bytes, found {}", 16 * count, data.len())));
        }
        let mut floats = data.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")));
        let mut next_store = || ParamStore {
            params: header
                .params
                .iter()
                .map(|m| Param {
                    name: m.name.clone(),
                    shape: m.shape.clone(),
                    value: floats.by_ref().take(m.shape.iter().product()).collect(),
                })
                .collect::<Vec<_>>(),
        };
        let best = next_store();
        let current = next_store();
        let m = next_store().params.into_iter().map(|p| p.value).collect();
        let v = next_store().params.into_iter().map(|p| p.value).collect();
        // Validates names and shapes against the configured architecture.
        Generator::from_params(header.model.clone(), current.clone())?;
        let adam = Adam { beta1: header.adam_betas[0], beta2: header.adam_betas[1], eps: header.adam_eps, step: header.adam_step, m, v };
        let state = TrainState {
            epoch: header.epoch,
            curve: header.curve,
            adam,
            best_val: header.best_val,
            best_epoch: header.best_epoch,
            best,
            since_best: header.since_best,
            stop: header.stop,
        };
        Ok(Self {
            model: header.model,
            train: header.train,
            dataset_digest: header.dataset_digest,
            dataset_manifest: header.dataset_manifest,
            state,
            current,
        })
    }
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

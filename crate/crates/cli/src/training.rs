//! `train`: fit a generator to a dataset directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qdgm_core::dataset::{Dataset, Split, MANIFEST_FILE};
use qdgm_model::checkpoint::Checkpoint;
use qdgm_model::train::{train, EpochRecord, LrSchedule, StopReason, TrainConfig, TrainData, TrainState};
use qdgm_model::{Generator, ModelConfig, ModelError};
use serde::{Deserialize, Serialize};

use crate::figures::{line_plot, save, Series, BLUE, RED};
use crate::run::{sibling, RunManifest};

/// Model and optimiser settings of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainJob {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl TrainJob {
    /// Defaults for an output size: the 64 desk model trains with a higher
    /// cosine-decayed rate under a 25 minute training budget, leaving room for
    /// data generation and evaluation within half an hour.
    pub fn for_size(size: usize) -> Result<Self> {
        let model = ModelConfig::for_size(size)?;
        let train = if size == 64 { desk_train_config() } else { TrainConfig::default() };
        Ok(Self { model, train })
    }
}

pub fn desk_train_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-3,
        schedule: LrSchedule::Cosine,
        batch_size: 32,
        epochs: 40,
        seed: 0,
        patience: 0,
        val_fraction: 0.1,
        clip_norm: Some(1.0),
        time_budget_secs: Some(1500.0),
    }
}

/// Output files written beside the checkpoint.
pub fn curve_json(ckpt: &Path) -> PathBuf {
    sibling(ckpt, ".curve.json")
}

pub fn curve_png(ckpt: &Path) -> PathBuf {
    sibling(ckpt, ".curve.png")
}

pub fn diverged_json(ckpt: &Path) -> PathBuf {
    sibling(ckpt, ".diverged.json")
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub stop: StopReason,
}

/// Trains on the dataset at `data` and writes `out` plus its curve files.
/// With `resume`, the run continues from that checkpoint, whose model,
/// training and dataset configuration must equal the effective ones.
pub fn run(job: &TrainJob, data: &Path, out: &Path, resume: Option<&Path>) -> Result<TrainOutcome> {
    let ds = Dataset::open(data).with_context(|| format!("opening dataset {}", data.display()))?;
    let manifest = &ds.manifest;
    if manifest.image_size != job.model.output_size {
        bail!("dataset images are {0}x{0} but the model emits {1}x{1}", manifest.image_size, job.model.output_size);
    }
    let digest = manifest.digest()?;
    let manifest_text = std::fs::read_to_string(data.join(MANIFEST_FILE))?;
    let scaling = manifest.feature_scaling.context("dataset manifest lacks feature scaling")?;
    let mut split = ds.load(Split::Train)?;
    for row in split.features.chunks_mut(job.model.input_len) {
        scaling.apply(row);
    }

    let (mut model, mut state) = match resume {
        Some(path) => {
            let ck = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
            if ck.model != job.model || ck.train != job.train {
                bail!("{} was trained with a different configuration", path.display());
            }
            if ck.dataset_digest != digest {
                bail!("{} was trained on a different dataset", path.display());
            }
            log::info!("resuming at epoch {}", ck.state.epoch);
            (ck.current_generator()?, ck.state)
        }
        None => {
            let model = Generator::<f32>::new(job.model.clone())?;
            let state = TrainState::new(&model);
            (model, state)
        }
    };
    log::info!("{} parameters, {} training samples", model.params.count(), split.samples);

    let data = TrainData { features: &split.features, labels: &split.labels };
    let stop = match train(&mut model, data, &job.train, &mut state, |r| {
        log::info!("epoch {} train {:.3e} val {:?} lr {:.2e} {:.1}s", r.epoch, r.train_loss, r.val_loss, r.learning_rate, r.seconds)
    }) {
        Ok(stop) => stop,
        Err(ModelError::Divergence { epoch, loss, curve }) => {
            let path = diverged_json(out);
            std::fs::write(&path, serde_json::to_string_pretty(&curve)?)?;
            bail!("training diverged at epoch {epoch} (loss {loss}); curve written to {}", path.display());
        }
        Err(e) => return Err(e.into()),
    };
    log::info!("stopped: {stop:?}, best epoch {}", state.best_epoch);

    let checkpoint = Checkpoint::new(&model, job.train.clone(), digest, manifest_text, state);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    checkpoint.save(out)?;
    write_curve(checkpoint.curve(), out)?;

    let mut run = RunManifest::new("train", job)?;
    run.input(&ds.root.join(MANIFEST_FILE))?;
    if let Some(path) = resume {
        run.input(path)?;
    }
    for path in [out.to_path_buf(), curve_json(out), curve_png(out)] {
        run.output(&path)?;
    }
    run.write(&sibling(out, ".run.toml"))?;
    Ok(TrainOutcome { checkpoint, stop })
}

fn write_curve(curve: &[EpochRecord], out: &Path) -> Result<()> {
    std::fs::write(curve_json(out), serde_json::to_string_pretty(curve)?)?;
    let x: Vec<f64> = curve.iter().map(|r| r.epoch as f64).collect();
    let train: Vec<f64> = curve.iter().map(|r| r.train_loss).collect();
    let val: Vec<f64> = curve.iter().map(|r| r.val_loss.unwrap_or(f64::NAN)).collect();
    let img = line_plot(&[Series { x: &x, y: &train, color: BLUE }, Series { x: &x, y: &val, color: RED }], 480, 320, true);
    save(&img, &curve_png(out))
}

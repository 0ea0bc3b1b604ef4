//! Mini-batch training with a held-out validation split.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::generator::Generator;
use crate::optim::Adam;
use crate::params::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LrSchedule {
    Constant,
    /// Cosine decay from the base rate to 5% of it over `epochs`.
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub val_fraction: f64,
    /// Global gradient-norm clip.
    pub clip_norm: Option<f64>,
    /// Wall-clock budget in seconds; training stops before an epoch that
    /// would overrun it.
    pub time_budget_secs: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            schedule: LrSchedule::Constant,
            batch_size: 32,
            epochs: 100,
            seed: 0,
            patience: 10,
            val_fraction: 0.1,
            clip_norm: Some(1.0),
            time_budget_secs: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::Config(format!("learning rate {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(ModelError::Config("batch size and epochs must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.val_fraction) {
            return Err(ModelError::Config(format!("validation fraction {} not in [0, 0.5)", self.val_fraction)));
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.schedule {
            LrSchedule::Constant => self.learning_rate,
            LrSchedule::Cosine => {
                let x = (epoch as f64 / self.epochs.max(1) as f64).min(1.0);
                self.learning_rate * (0.05 + 0.95 * 0.5 * (1.0 + (std::f64::consts::PI * x).cos()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub learning_rate: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Epochs,
    Patience,
    TimeBudget,
}

/// Borrowed training set: `n` sample-major features and labels.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub features: &'a [f32],
    pub labels: &'a [f32],
}

/// Everything needed to continue an interrupted run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub epoch: usize,
    pub curve: Vec<EpochRecord>,
    pub adam: Adam,
    pub best_val: Option<f64>,
    pub best_epoch: usize,
    pub best: ParamStore<f32>,
    pub since_best: usize,
    pub stop: Option<StopReason>,
}

impl TrainState {
    pub fn new(model: &Generator<f32>) -> Self {
        Self {
            epoch: 0,
            curve: Vec::new(),
            adam: Adam::new(&model.params),
            best_val: None,
            best_epoch: 0,
            best: model.params.clone(),
            since_best: 0,
            stop: None,
        }
    }
}

/// Deterministic train/validation split of `0..n`.
pub fn split_indices(n: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5111));
    let n_val = if val_fraction > 0.0 && n >= 2 { ((n as f64 * val_fraction).round() as usize).clamp(1, n - 1) } else { 0 };
    let val = idx.split_off(n - n_val);
    (idx, val)
}

fn gather(src: &[f32], width: usize, idx: &[usize]) -> Vec<f32> {
    let mut out = Vec::with_capacity(idx.len() * width);
    for &i in idx {
        out.extend_from_slice(&src[i * width..(i + 1) * width]);
    }
    out
}

/// Mean loss over `idx`, evaluated in batches.
pub fn evaluate(model: &Generator<f32>, data: TrainData, idx: &[usize], batch: usize) -> Result<f64> {
    let (fl, ll) = (model.config.input_len, model.config.output_len());
    let mut total = 0.0;
    for chunk in idx.chunks(batch.max(1)) {
        total += model.loss(&gather(data.features, fl, chunk), &gather(data.labels, ll, chunk))? * chunk.len() as f64;
    }
    Ok(total / idx.len().max(1) as f64)
}

/// Runs epochs from `state.epoch` until a stop condition. `model` ends
/// with the last-epoch weights; `state.best` holds the lowest-validation
/// weights (or the last ones without a validation split).
pub fn train(
    model: &mut Generator<f32>,
    data: TrainData,
    cfg: &TrainConfig,
    state: &mut TrainState,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<StopReason> {
    cfg.validate()?;
    let (fl, ll) = (model.config.input_len, model.config.output_len());
    if data.features.len() % fl != 0 || data.labels.len() % ll != 0 || data.features.len() / fl != data.labels.len() / ll {
        return Err(ModelError::Shape(format!(
            "{} feature values and {} label values do not describe the same samples",
            data.features.len(),
            data.labels.len()
        )));
    }
    let n = data.features.len() / fl;
    if n == 0 {
        return Err(ModelError::Shape("empty training set".into()));
    }
    let (train_idx, val_idx) = split_indices(n, cfg.val_fraction, cfg.seed);
    let started = Instant::now();
    let mut last_epoch_secs = 0.0;
    while state.epoch < cfg.epochs {
        if let Some(budget) = cfg.time_budget_secs {
            if started.elapsed().as_secs_f64() + last_epoch_secs > budget {
                state.stop = Some(StopReason::TimeBudget);
                return Ok(StopReason::TimeBudget);
            }
        }
        let t0 = Instant::now();
        let epoch = state.epoch;
        let lr = cfg.learning_rate_at(epoch);
        let mut order = train_idx.clone();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(epoch as u64)));
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grads) = model.loss_and_grad(&gather(data.features, fl, batch), &gather(data.labels, ll, batch))?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(ModelError::Divergence { epoch, loss, curve: state.curve.clone() });
            }
            let scale = match cfg.clip_norm {
                Some(c) => (c / grads.norm().max(1e-30)).min(1.0),
                None => 1.0,
            };
            state.adam.update(&mut model.params, &grads, lr, scale);
            total += loss * batch.len() as f64;
        }
        let train_loss = total / order.len() as f64;
        let val_loss = if val_idx.is_empty() { None } else { Some(evaluate(model, data, &val_idx, cfg.batch_size)?) };
        if !val_loss.unwrap_or(0.0).is_finite() {
            return Err(ModelError::Divergence { epoch, loss: val_loss.unwrap_or(f64::NAN), curve: state.curve.clone() });
        }
        last_epoch_secs = t0.elapsed().as_secs_f64();
        let record = EpochRecord { epoch, train_loss, val_loss, learning_rate: lr, seconds: last_epoch_secs };
        on_epoch(&record);
        state.curve.push(record);
        state.epoch += 1;
        match val_loss {
            Some(v) if state.best_val.is_none_or(|b| v < b) => {
                state.best_val = Some(v);
                state.best_epoch = epoch;
                state.best = model.params.clone();
                state.since_best = 0;
            }
            Some(_) => state.since_best += 1,
            None => {
                state.best = model.params.clone();
                state.best_epoch = epoch;
            }
        }
        if cfg.patience > 0 && state.since_best >= cfg.patience {
            state.stop = Some(StopReason::Patience);
            return Ok(StopReason::Patience);
        }
    }
    state.stop = Some(StopReason::Epochs);
    Ok(StopReason::Epochs)
}

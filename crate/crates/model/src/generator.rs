//! Input projection, six residual stages and a tanh head.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blocks::{DeconvBlock, IdentityBlock, MainCache};
use crate::error::{ModelError, Result};
use crate::layers::{relu, relu_backward, ConvT2d, Linear};
use crate::params::{Grads, ParamStore};
use crate::real::Real;
use crate::tensor::Tensor;

pub const STAGES: usize = 6;
/// Side of the seed tensor produced by the input projection.
pub const SEED_SIDE: usize = 4;
/// Three marginals of 721 samples each.
pub const INPUT_LEN: usize = 3 * 721;
pub const OUT_CHANNELS: usize = 3;
/// Samples per forward chunk in inference.
const INFER_CHUNK: usize = 32;
/// The head emits `HEAD_SCALE tanh(z)`, clamped to [-1, 1] at inference.
/// Saturated label values (the colour map's white) then sit where tanh
/// still has slope.
pub const HEAD_SCALE: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub output_size: usize,
    pub input_len: usize,
    /// Channels of the `C x 4 x 4` seed tensor.
    pub seed_channels: usize,
    /// Output channels of each stage.
    pub channels: Vec<usize>,
    /// Blocks per stage, counting the leading deconvolution block.
    pub blocks_per_stage: Vec<usize>,
    pub init_seed: u64,
}

impl ModelConfig {
    /// 64x64 model sized for single-core training.
    pub fn desk() -> Self {
        Self {
            output_size: 64,
            input_len: INPUT_LEN,
            seed_channels: 64,
            channels: vec![64, 64, 48, 32, 24, 16],
            blocks_per_stage: vec![2; STAGES],
            init_seed: 0,
        }
    }

    pub fn full() -> Self {
        Self {
            output_size: 256,
            input_len: INPUT_LEN,
            seed_channels: 256,
            channels: vec![256, 192, 128, 64, 32, 16],
            blocks_per_stage: vec![2; STAGES],
            init_seed: 0,
        }
    }

    /// Preset for a given output side: 64 is the desk model, 128 and 256
    /// use the full widths.
    pub fn for_size(size: usize) -> Result<Self> {
        let cfg = match size {
            64 => Self::desk(),
            128 | 256 => Self { output_size: size, ..Self::full() },
            _ => return Err(ModelError::Config(format!("output size {size} not in {{64, 128, 256}}"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Which stages upsample by two: the last `log2(S / 4)` of them.
    pub fn upsample_schedule(&self) -> Result<Vec<bool>> {
        if !matches!(self.output_size, 64 | 128 | 256) {
            return Err(ModelError::Config(format!("output size {} not in {{64, 128, 256}}", self.output_size)));
        }
        let ups = (self.output_size / SEED_SIDE).trailing_zeros() as usize;
        if ups > STAGES || SEED_SIDE << ups != self.output_size {
            return Err(ModelError::Config(format!("cannot reach {} from {SEED_SIDE} in {STAGES} stages", self.output_size)));
        }
        Ok((0..STAGES).map(|s| s >= STAGES - ups).collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.upsample_schedule()?;
        if self.channels.len() != STAGES || self.blocks_per_stage.len() != STAGES {
            return Err(ModelError::Config(format!("channels and blocks_per_stage need {STAGES} entries")));
        }
        if self.channels.iter().chain([&self.seed_channels]).any(|&c| c == 0) {
            return Err(ModelError::Config("channel counts must be positive".into()));
        }
        if self.blocks_per_stage.iter().any(|&b| b == 0) {
            return Err(ModelError::Config("every stage needs at least its deconvolution block".into()));
        }
        if self.input_len == 0 {
            return Err(ModelError::Config("input length must be positive".into()));
        }
        Ok(())
    }

    pub fn output_len(&self) -> usize {
        OUT_CHANNELS * self.output_size * self.output_size
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Block {
    Deconv(DeconvBlock),
    Identity(IdentityBlock),
}

#[derive(Debug, Clone, PartialEq)]
struct Arch {
    input: Linear,
    blocks: Vec<Block>,
    head: ConvT2d,
}

impl Arch {
    fn build<T: Real>(cfg: &ModelConfig, ps: &mut ParamStore<T>) -> Result<Self> {
        let schedule = cfg.upsample_schedule()?;
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
        let input = Linear::new(ps, "input", cfg.input_len, cfg.seed_channels * SEED_SIDE * SEED_SIDE, 1.0, &mut rng);
        let mut blocks = Vec::new();
        let mut c = cfg.seed_channels;
        for (s, (&width, &count)) in cfg.channels.iter().zip(&cfg.blocks_per_stage).enumerate() {
            blocks.push(Block::Deconv(DeconvBlock::new(ps, &format!("stage{s}.deconv"), c, width, schedule[s], &mut rng)));
            c = width;
            for b in 1..count {
                blocks.push(Block::Identity(IdentityBlock::new(ps, &format!("stage{s}.identity{b}"), c, &mut rng)));
            }
        }
        let head = ConvT2d::new(ps, "head", c, OUT_CHANNELS, 3, 1, 1, 0.5, &mut rng);
        Ok(Self { input, blocks, head })
    }
}

/// Activations kept by a training forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    features: Vec<T>,
    n: usize,
    block_inputs: Vec<(Tensor<T>, MainCache<T>)>,
    head_input: Tensor<T>,
    output: Tensor<T>,
}

impl<T: Real> ForwardCache<T> {
    /// Unclamped head output, sample-major `N x 3 x S x S`; the training
    /// loss is measured on this.
    pub fn output(&self) -> Vec<T> {
        let scale = T::of(HEAD_SCALE);
        self.output.to_nchw().into_iter().map(|v| scale * v).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator<T> {
    pub config: ModelConfig,
    pub params: ParamStore<T>,
    arch: Arch,
}

impl<T: Real> Generator<T> {
    /// Fresh weights drawn from `config.init_seed`. Initialisation runs in
    /// f64 so both precisions start from the same weights.
    pub fn new(config: ModelConfig) -> Result<Self> {
        let mut ps = ParamStore::<f64>::new();
        let arch = Arch::build(&config, &mut ps)?;
        Ok(Self { config, params: ps.cast(), arch })
    }

    /// Rebuilds the architecture and adopts `params`, which must match it
    /// name by name and shape by shape.
    pub fn from_params(config: ModelConfig, params: ParamStore<T>) -> Result<Self> {
        let fresh = Self::new(config)?;
        if fresh.params.params.len() != params.params.len() {
            return Err(ModelError::Shape(format!(
                "expected {} parameter tensors, got {}",
                fresh.params.params.len(),
                params.params.len()
            )));
        }
        for (a, b) in fresh.params.params.iter().zip(&params.params) {
            if a.name != b.name || a.shape != b.shape {
                return Err(ModelError::Shape(format!("parameter {} {:?} vs {} {:?}", a.name, a.shape, b.name, b.shape)));
            }
        }
        Ok(Self { params, ..fresh })
    }

    pub fn cast<U: Real>(&self) -> Generator<U> {
        Generator { config: self.config.clone(), params: self.params.cast(), arch: self.arch.clone() }
    }

    fn batch_size(&self, features: &[T]) -> Result<usize> {
        let len = self.config.input_len;
        if features.is_empty() || features.len() % len != 0 {
            return Err(ModelError::Shape(format!("feature length {} is not a multiple of {len}", features.len())));
        }
        if !features.iter().all(|v| v.is_finite()) {
            return Err(ModelError::NonFinite("input features"));
        }
        Ok(features.len() / len)
    }

    /// Inference on `N x input_len` features; returns `N x 3 x S x S`
    /// images in [-1, 1].
    pub fn forward(&self, features: &[T]) -> Result<Vec<T>> {
        let one = T::one();
        Ok(self.soft_forward(features)?.into_iter().map(|v| v.max(-one).min(one)).collect())
    }

    /// As [`Self::forward`] without the final clamp.
    pub fn soft_forward(&self, features: &[T]) -> Result<Vec<T>> {
        self.batch_size(features)?;
        let len = self.config.input_len;
        let mut out = Vec::with_capacity(features.len() / len * self.config.output_len());
        for chunk in features.chunks(INFER_CHUNK * len) {
            out.extend(self.forward_cached(chunk)?.output());
        }
        Ok(out)
    }

    pub fn forward_cached(&self, features: &[T]) -> Result<ForwardCache<T>> {
        let n = self.batch_size(features)?;
        let seed = self.arch.input.forward(&self.params, features, n);
        let mut x = Tensor::from_nchw(self.config.seed_channels, n, SEED_SIDE, SEED_SIDE, &seed);
        let mut block_inputs = Vec::with_capacity(self.arch.blocks.len());
        for block in &self.arch.blocks {
            let (y, cache) = match block {
                Block::Deconv(b) => b.forward(&self.params, &x),
                Block::Identity(b) => b.forward(&self.params, &x),
            };
            block_inputs.push((x, cache));
            x = y;
        }
        let head_input = relu(&x);
        let output = self.arch.head.forward(&self.params, &head_input).map(|v| v.tanh());
        Ok(ForwardCache { features: features.to_vec(), n, block_inputs, head_input, output })
    }

    /// Gradients for a loss whose derivative with respect to the output
    /// images (sample-major) is `d_out`.
    pub fn backward(&self, cache: &ForwardCache<T>, d_out: &[T]) -> Result<Grads<T>> {
        let s = self.config.output_size;
        if d_out.len() != cache.n * self.config.output_len() {
            return Err(ModelError::Shape(format!("output gradient length {}", d_out.len())));
        }
        let dy = Tensor::from_nchw(OUT_CHANNELS, cache.n, s, s, d_out);
        let scale = T::of(HEAD_SCALE);
        let data = dy.data.iter().zip(&cache.output.data).map(|(&d, &t)| d * scale * (T::one() - t * t)).collect();
        let dz = Tensor::from_vec(dy.c, dy.n, dy.h, dy.w, data);
        let mut g = self.params.zero_grads();
        let da = self.arch.head.backward(&self.params, &mut g, &cache.head_input, &dz);
        let mut dx = relu_backward(&cache.head_input, &da);
        for (block, (x, main)) in self.arch.blocks.iter().zip(&cache.block_inputs).rev() {
            dx = match block {
                Block::Deconv(b) => b.backward(&self.params, &mut g, x, main, &dx),
                Block::Identity(b) => b.backward(&self.params, &mut g, main, &dx),
            };
        }
        self.arch.input.backward(&self.params, &mut g, &cache.features, &dx.to_nchw(), cache.n);
        Ok(g)
    }

    /// Mean squared error over all pixels, channels and samples, on the
    /// unclamped output.
    pub fn loss(&self, features: &[T], labels: &[T]) -> Result<f64> {
        let out = self.soft_forward(features)?;
        check_labels(&out, labels)?;
        Ok(mse(&out, labels))
    }

    pub fn loss_and_grad(&self, features: &[T], labels: &[T]) -> Result<(f64, Grads<T>)> {
        let cache = self.forward_cached(features)?;
        let out = cache.output();
        check_labels(&out, labels)?;
        let scale = T::of(2.0 / out.len() as f64);
        let d_out: Vec<T> = out.iter().zip(labels).map(|(&y, &t)| scale * (y - t)).collect();
        let g = self.backward(&cache, &d_out)?;
        Ok((mse(&out, labels), g))
    }
}

fn check_labels<T>(out: &[T], labels: &[T]) -> Result<()> {
    if out.len() != labels.len() {
        return Err(ModelError::Shape(format!("labels have {} values, output {}", labels.len(), out.len())));
    }
    Ok(())
}

fn mse<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x.as_f64() - y.as_f64()).powi(2)).sum::<f64>() / a.len() as f64
}

//! Training sets: parameter plans, generation and the on-disk layout.
//!
//! A dataset directory holds `manifest.toml` and one subdirectory per split
//! with `features.f32` (`N x 3 x 721`, little endian), `labels.f32`
//! (`N x 3 x S x S`, channel-major RGB) and `params.json`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cher::{CherConfig, SpectralDensity};
use crate::colormap::{encode_grid, ColorMapConfig, EncodeStats, EncodedImage};
use crate::digest::{sha256_hex, Hasher};
use crate::error::{Error, Result};
use crate::export::write_atomic;
use crate::grid::{AxisLabel, Marginal, MarginalTriple, UniformGrid, FEATURE_LEN, MARGINAL_LEN};
use crate::synth::{analytic_marginals, eval_joint, fit_preset, sample_params, MarginalProfile, SynthConfig, SynthGrids, SyntheticSample};
use crate::wigner::{fock_density, wigner_from_density, wigner_marginals, NoisyStateParams, StateKind, WignerGridConfig, DEFAULT_N_CUT};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";
const CHUNK: usize = 64;
/// Training samples inspected when fitting the CHER colour-map span.
const SPAN_SAMPLES: usize = 2000;
const SPAN_QUANTILE: f64 = 0.99;
const CHER_JOINT_HALF: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetPreset {
    CherSuperOhmic,
    CherDrudeLorentz,
    Wigner,
}

impl DatasetPreset {
    pub const ALL: [DatasetPreset; 3] = [Self::CherSuperOhmic, Self::CherDrudeLorentz, Self::Wigner];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CherSuperOhmic => "cher-superohmic",
            Self::CherDrudeLorentz => "cher-drudelorentz",
            Self::Wigner => "wigner",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}")))
    }

    pub fn is_cher(&self) -> bool {
        !matches!(self, Self::Wigner)
    }

    /// Bath with `eta = 0.1` and unit cutoff; `None` for Wigner.
    pub fn spectral_density(&self) -> Option<SpectralDensity> {
        match self {
            Self::CherSuperOhmic => Some(SpectralDensity::SuperOhmic { eta: 0.1, s: 2.0, omega_c: 1.0 }),
            Self::CherDrudeLorentz => Some(SpectralDensity::DrudeLorentz { eta: 0.1, gamma: 1.0 }),
            Self::Wigner => None,
        }
    }

    /// Full-scale sample counts.
    pub fn full_counts(&self) -> SplitCounts {
        match self {
            Self::CherSuperOhmic => SplitCounts { plain: 10_000, signed: 20_000, test: 100 },
            Self::CherDrudeLorentz => SplitCounts { plain: 10_000, signed: 21_000, test: 100 },
            Self::Wigner => SplitCounts { plain: 16_000, signed: 18_000, test: 100 },
        }
    }

    pub fn axes(&self) -> [AxisLabel; 3] {
        if self.is_cher() {
            [AxisLabel::X1, AxisLabel::X13, AxisLabel::U]
        } else {
            [AxisLabel::X, AxisLabel::P, AxisLabel::U]
        }
    }
}

impl std::fmt::Display for DatasetPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sample counts. `plain` are ordinary Gaussians (CHER) or coherent states
/// (Wigner); `signed` are signed mixtures or cat states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub plain: usize,
    pub signed: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn train(&self) -> usize {
        self.plain + self.signed
    }

    /// Same plain/signed ratio with `train` training samples.
    pub fn scaled(&self, train: usize, test: usize) -> Self {
        let plain = (train as f64 * self.plain as f64 / self.train() as f64).round() as usize;
        Self { plain, signed: train - plain, test }
    }

    /// Plain samples in the test split, in the training ratio.
    pub fn test_plain(&self) -> usize {
        if self.train() == 0 {
            return 0;
        }
        (self.test as f64 * self.plain as f64 / self.train() as f64).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Test => "test",
        }
    }

    fn id(&self) -> u64 {
        match self {
            Self::Train => 1,
            Self::Test => 2,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sample `index` in `split`; independent of worker scheduling.
pub fn sample_seed(seed: u64, split: Split, index: usize) -> u64 {
    splitmix64(splitmix64(seed ^ split.id().rotate_left(56)) ^ index as u64)
}

/// Generating parameters of one datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SampleParams {
    Synthetic(SyntheticSample),
    Wigner(NoisyStateParams),
}

/// User-facing knobs of a dataset build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub preset: DatasetPreset,
    pub seed: u64,
    pub counts: SplitCounts,
    /// Label side length in pixels.
    pub image_size: usize,
    /// Fitted from FToG profiles when absent.
    #[serde(default)]
    pub synth: Option<SynthConfig>,
    #[serde(default)]
    pub spectral_density: Option<SpectralDensity>,
    #[serde(default = "default_n_cut")]
    pub n_cut: usize,
}

fn default_n_cut() -> usize {
    DEFAULT_N_CUT
}

impl DatasetConfig {
    pub fn full(preset: DatasetPreset, seed: u64) -> Self {
        Self {
            preset,
            seed,
            counts: preset.full_counts(),
            image_size: 256,
            synth: None,
            spectral_density: preset.spectral_density(),
            n_cut: DEFAULT_N_CUT,
        }
    }

    /// Reduced build with `train` training samples in the full-scale ratio.
    pub fn reduced(preset: DatasetPreset, seed: u64, train: usize, test: usize, image_size: usize) -> Self {
        Self { counts: preset.full_counts().scaled(train, test), image_size, ..Self::full(preset, seed) }
    }

    fn validate(&self) -> Result<()> {
        if self.image_size < 4 {
            return Err(Error::Config(format!("image size {} too small", self.image_size)));
        }
        if self.counts.train() == 0 {
            return Err(Error::Config("empty training split".into()));
        }
        if self.preset.is_cher() && self.spectral_density.is_none() {
            return Err(Error::Config(format!("{} needs a spectral density", self.preset)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitFiles {
    pub samples: usize,
    pub features_sha256: String,
    pub labels_sha256: String,
    pub params_sha256: String,
}

/// Per-channel affine standardization of the features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl FeatureScaling {
    pub fn identity() -> Self {
        Self { mean: [0.0; 3], std: [1.0; 3] }
    }

    pub fn apply(&self, feature: &mut [f32]) {
        for (c, chunk) in feature.chunks_mut(MARGINAL_LEN).enumerate() {
            let (m, s) = (self.mean[c % 3], self.std[c % 3]);
            for v in chunk {
                *v = ((*v as f64 - m) / s) as f32;
            }
        }
    }
}

/// Everything needed to reproduce or interpret a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub preset: DatasetPreset,
    pub seed: u64,
    pub counts: SplitCounts,
    pub image_size: usize,
    pub axes: [AxisLabel; 3],
    pub joint_axis: UniformGrid,
    pub marginal_grids: [UniformGrid; 3],
    pub colormap: ColorMapConfig,
    pub colormap_rule: String,
    pub params_sha256: String,
    pub spectral_density: Option<SpectralDensity>,
    pub cher: Option<CherConfig>,
    pub synth: Option<SynthConfig>,
    pub fit_profiles: Vec<MarginalProfile>,
    pub wigner_grid: Option<WignerGridConfig>,
    pub n_cut: Option<usize>,
    pub feature_scaling: Option<FeatureScaling>,
    pub encode_stats: Option<EncodeStats>,
    pub train: Option<SplitFiles>,
    pub test: Option<SplitFiles>,
}

impl Manifest {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot encode manifest: {e}")))
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::Format { path: path.to_path_buf(), reason: e.to_string() })?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::Format { path: path.to_path_buf(), reason: format!("format version {}", m.format_version) });
        }
        Ok(m)
    }

    pub fn digest(&self) -> Result<String> {
        Ok(sha256_hex(self.to_toml()?.as_bytes()))
    }

    pub fn split(&self, split: Split) -> Option<&SplitFiles> {
        match split {
            Split::Train => self.train.as_ref(),
            Split::Test => self.test.as_ref(),
        }
    }

    pub fn synth_grids(&self) -> SynthGrids {
        SynthGrids {
            joint: self.joint_axis,
            first: self.marginal_grids[0],
            second: self.marginal_grids[1],
            oblique: self.marginal_grids[2],
        }
    }

    /// Marginals stored in an unscaled `3 x 721` feature row.
    pub fn triple_from_feature(&self, feature: &[f32]) -> Result<MarginalTriple> {
        if feature.len() != FEATURE_LEN {
            return Err(Error::shape(FEATURE_LEN, feature.len()));
        }
        let marginal = |k: usize| {
            let values = feature[k * MARGINAL_LEN..(k + 1) * MARGINAL_LEN].iter().map(|&v| v as f64).collect();
            Marginal::new(self.axes[k], self.marginal_grids[k], values)
        };
        Ok(MarginalTriple { first: marginal(0)?, second: marginal(1)?, oblique: marginal(2)? })
    }
}

/// One generated datum.
#[derive(Debug, Clone)]
pub struct Datum {
    pub marginals: MarginalTriple,
    pub label: EncodedImage,
    pub stats: EncodeStats,
}

/// Parameters of every sample plus the manifest they imply. Building a plan
/// is cheap; [`DatasetPlan::write`] does the expensive evaluation.
#[derive(Debug, Clone)]
pub struct DatasetPlan {
    pub manifest: Manifest,
    pub train: Vec<SampleParams>,
    pub test: Vec<SampleParams>,
}

impl DatasetPlan {
    pub fn build(cfg: &DatasetConfig) -> Result<Self> {
        cfg.validate()?;
        let counts = cfg.counts;
        let test_plain = counts.test_plain();
        let mut manifest = Manifest {
            format_version: FORMAT_VERSION,
            preset: cfg.preset,
            seed: cfg.seed,
            counts,
            image_size: cfg.image_size,
            axes: cfg.preset.axes(),
            joint_axis: UniformGrid::symmetric(1.0, 2)?,
            marginal_grids: [UniformGrid::symmetric(1.0, 2)?; 3],
            colormap: ColorMapConfig::wigner(),
            colormap_rule: String::new(),
            params_sha256: String::new(),
            spectral_density: None,
            cher: None,
            synth: None,
            fit_profiles: Vec::new(),
            wigner_grid: None,
            n_cut: None,
            feature_scaling: None,
            encode_stats: None,
            train: None,
            test: None,
        };
        let (train, test) = if cfg.preset.is_cher() {
            let sd = cfg.spectral_density.ok_or_else(|| Error::Config("missing spectral density".into()))?;
            sd.validate()?;
            let cher = CherConfig::for_density(&sd);
            let synth = match cfg.synth {
                Some(s) => {
                    s.validate()?;
                    s
                }
                None => {
                    let (s, profiles) = fit_preset(&sd, &cher)?;
                    manifest.fit_profiles = profiles;
                    s
                }
            };
            let grids = SynthGrids::new(CHER_JOINT_HALF * sd.scale(), cfg.image_size, &cher)?;
            let draw = |split: Split, n: usize, n_plain: usize| -> Result<Vec<SampleParams>> {
                (0..n)
                    .map(|i| {
                        let c = if i < n_plain { synth.plain() } else { synth };
                        sample_params(sample_seed(cfg.seed, split, i), &c).map(SampleParams::Synthetic)
                    })
                    .collect()
            };
            let train = draw(Split::Train, counts.train(), counts.plain)?;
            let test = draw(Split::Test, counts.test, test_plain)?;
            let zeta0 = ColorMapConfig::cher().zeta0;
            let z_scale = fit_z_scale(&train, &grids.joint, zeta0);
            manifest.colormap = ColorMapConfig::anchored(zeta0, z_scale)?;
            manifest.colormap_rule = format!(
                "z = 0 at zeta0; span is the larger of the {SPAN_QUANTILE} quantiles of peak / (1 - zeta0) and depth / zeta0 over the first {SPAN_SAMPLES} training samples"
            );
            manifest.joint_axis = grids.joint;
            manifest.marginal_grids = [grids.first, grids.second, grids.oblique];
            manifest.spectral_density = Some(sd);
            manifest.cher = Some(cher);
            manifest.synth = Some(synth);
            (train, test)
        } else {
            let grid = WignerGridConfig { joint_len: cfg.image_size, ..WignerGridConfig::default() };
            let draw = |split: Split, n: usize, n_plain: usize| -> Vec<SampleParams> {
                (0..n)
                    .map(|i| {
                        let kind = if i < n_plain { StateKind::Coherent } else { StateKind::Cat };
                        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(cfg.seed, split, i));
                        SampleParams::Wigner(NoisyStateParams::sample(kind, &mut rng))
                    })
                    .collect()
            };
            let train = draw(Split::Train, counts.train(), counts.plain);
            let test = draw(Split::Test, counts.test, test_plain);
            if let Some(worst) = train.iter().chain(&test).find_map(|p| match p {
                SampleParams::Wigner(w) if w.min_cutoff() > cfg.n_cut => Some(w.min_cutoff()),
                _ => None,
            }) {
                return Err(Error::Config(format!("n_cut {} below required {worst}", cfg.n_cut)));
            }
            manifest.colormap = ColorMapConfig::wigner();
            manifest.colormap_rule = "fixed: zeta = (z + 0.45) / 0.9".into();
            manifest.joint_axis = grid.joint_axis()?;
            manifest.marginal_grids = [grid.marginal_axis()?; 3];
            manifest.wigner_grid = Some(grid);
            manifest.n_cut = Some(cfg.n_cut);
            (train, test)
        };
        let mut h = Hasher::new();
        h.update_json(&train)?;
        h.update_json(&test)?;
        manifest.params_sha256 = h.finish();
        Ok(Self { manifest, train, test })
    }

    pub fn params(&self, split: Split) -> &[SampleParams] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    /// Evaluate sample `index` of `split`.
    pub fn generate(&self, split: Split, index: usize) -> Result<Datum> {
        let params = self.params(split).get(index).ok_or_else(|| Error::shape(self.params(split).len(), index))?;
        generate(&self.manifest, params)
    }

    /// Evaluate every sample and write the dataset to `out`. Nothing is left
    /// at `out` unless the whole build succeeds.
    pub fn write(&self, out: &Path) -> Result<Manifest> {
        if out.exists() {
            return Err(Error::Config(format!("{} already exists", out.display())));
        }
        let mut partial = out.as_os_str().to_owned();
        partial.push(".partial");
        let partial = PathBuf::from(partial);
        if partial.exists() {
            fs::remove_dir_all(&partial).map_err(|e| Error::io(&partial, e))?;
        }
        let result = self.write_into(&partial).and_then(|m| {
            fs::rename(&partial, out).map_err(|e| Error::io(out, e))?;
            Ok(m)
        });
        if result.is_err() {
            let _ = fs::remove_dir_all(&partial);
        }
        result
    }

    fn write_into(&self, dir: &Path) -> Result<Manifest> {
        let mut manifest = self.manifest.clone();
        let mut stats = EncodeStats::default();
        let mut moments = [[0.0f64; 2]; 3];
        for split in [Split::Train, Split::Test] {
            let sub = dir.join(split.as_str());
            fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            let params = self.params(split);
            let mut features = HashedWriter::create(&sub.join("features.f32"))?;
            let mut labels = HashedWriter::create(&sub.join("labels.f32"))?;
            for start in (0..params.len()).step_by(CHUNK) {
                let end = (start + CHUNK).min(params.len());
                let data = params[start..end]
                    .par_iter()
                    .map(|p| generate(&self.manifest, p))
                    .collect::<Result<Vec<_>>>()?;
                for d in data {
                    let feature = d.marginals.to_feature();
                    if split == Split::Train {
                        for (c, chunk) in feature.chunks(MARGINAL_LEN).enumerate() {
                            for &v in chunk {
                                moments[c][0] += v as f64;
                                moments[c][1] += (v as f64) * (v as f64);
                            }
                        }
                    }
                    features.write_f32(&feature)?;
                    labels.write_f32(&d.label.to_f32())?;
                    stats.merge(d.stats);
                }
            }
            let params_json =
                serde_json::to_vec(params).map_err(|e| Error::Config(format!("cannot encode params: {e}")))?;
            let params_path = sub.join("params.json");
            fs::write(&params_path, &params_json).map_err(|e| Error::io(&params_path, e))?;
            let files = SplitFiles {
                samples: params.len(),
                features_sha256: features.finish()?,
                labels_sha256: labels.finish()?,
                params_sha256: sha256_hex(&params_json),
            };
            match split {
                Split::Train => manifest.train = Some(files),
                Split::Test => manifest.test = Some(files),
            }
        }
        let n = (self.train.len() * MARGINAL_LEN) as f64;
        let mut scaling = FeatureScaling::identity();
        for c in 0..3 {
            let mean = moments[c][0] / n;
            scaling.mean[c] = mean;
            scaling.std[c] = (moments[c][1] / n - mean * mean).max(1e-24).sqrt();
        }
        manifest.feature_scaling = Some(scaling);
        manifest.encode_stats = Some(stats);
        write_atomic(&dir.join(MANIFEST_FILE), manifest.to_toml()?.as_bytes())?;
        Ok(manifest)
    }
}

struct HashedWriter {
    path: PathBuf,
    inner: BufWriter<File>,
    hasher: Hasher,
    buf: Vec<u8>,
}

impl HashedWriter {
    fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), inner: BufWriter::new(file), hasher: Hasher::new(), buf: Vec::new() })
    }

    fn write_f32(&mut self, values: &[f32]) -> Result<()> {
        self.buf.clear();
        self.buf.extend(values.iter().flat_map(|v| v.to_le_bytes()));
        self.hasher.update(&self.buf);
        self.inner.write_all(&self.buf).map_err(|e| Error::io(&self.path, e))
    }

    fn finish(mut self) -> Result<String> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.hasher.finish())
    }
}

/// Evaluate one datum described by `params` on the grids of `manifest`.
pub fn generate(manifest: &Manifest, params: &SampleParams) -> Result<Datum> {
    match params {
        SampleParams::Synthetic(s) => {
            let grids = manifest.synth_grids();
            let marginals = analytic_marginals(s, &grids)?;
            let (label, stats) = encode_grid(&eval_joint(s, &grids.joint), &manifest.colormap)?;
            Ok(Datum { marginals, label, stats })
        }
        SampleParams::Wigner(w) => {
            let grid = manifest.wigner_grid.ok_or_else(|| Error::Config("manifest lacks a Wigner grid".into()))?;
            let n_cut = manifest.n_cut.unwrap_or(DEFAULT_N_CUT);
            let rho = fock_density(w, n_cut)?;
            let marginals = wigner_marginals(&rho, &grid)?;
            let (label, stats) = encode_grid(&wigner_from_density(&rho, &grid)?, &manifest.colormap)?;
            Ok(Datum { marginals, label, stats })
        }
    }
}

/// Height span covering the bulk of the training labels, so that
/// `z in [-zeta0 span, (1 - zeta0) span]` maps onto the colour map.
fn fit_z_scale(train: &[SampleParams], joint: &UniformGrid, zeta0: f64) -> f64 {
    let coarse = UniformGrid::symmetric(joint.max, 64).expect("valid coarse grid");
    let pts = coarse.points();
    let mut peaks = Vec::new();
    let mut depths = Vec::new();
    for p in train.iter().take(SPAN_SAMPLES) {
        let SampleParams::Synthetic(s) = p else { continue };
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        let probes = [s.p.mean, s.p_prime.mean, s.p_dprime.mean];
        let values = pts
            .iter()
            .flat_map(|&x| pts.iter().map(move |&y| (x, y)))
            .chain(probes.iter().map(|m| (m[0], m[1])))
            .map(|(x, y)| s.density(x, y));
        for v in values {
            hi = hi.max(v);
            lo = lo.min(v);
        }
        peaks.push(hi);
        depths.push((-lo).max(0.0));
    }
    let q = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v.get(((v.len() as f64 - 1.0) * SPAN_QUANTILE).round() as usize).copied().unwrap_or(0.0)
    };
    (q(&mut peaks) / (1.0 - zeta0)).max(q(&mut depths) / zeta0).max(1e-6)
}

/// Loaded split contents.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub samples: usize,
    /// `samples x 3 x 721`.
    pub features: Vec<f32>,
    /// `samples x 3 x S x S`.
    pub labels: Vec<f32>,
}

impl SplitData {
    pub fn feature(&self, i: usize) -> &[f32] {
        &self.features[i * FEATURE_LEN..(i + 1) * FEATURE_LEN]
    }

    pub fn label(&self, i: usize) -> &[f32] {
        let n = self.labels.len() / self.samples.max(1);
        &self.labels[i * n..(i + 1) * n]
    }
}

/// A dataset directory opened for reading.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self { root: root.to_path_buf(), manifest: Manifest::from_toml(&text, &path)? })
    }

    fn files(&self, split: Split) -> Result<&SplitFiles> {
        self.manifest
            .split(split)
            .ok_or_else(|| Error::Format { path: self.root.clone(), reason: format!("no {} split", split.as_str()) })
    }

    /// Read a split and check it against the manifest digests.
    pub fn load(&self, split: Split) -> Result<SplitData> {
        let files = self.files(split)?;
        let dir = self.root.join(split.as_str());
        let s = self.manifest.image_size;
        let features = read_f32(&dir.join("features.f32"), files.samples * FEATURE_LEN, &files.features_sha256)?;
        let labels = read_f32(&dir.join("labels.f32"), files.samples * 3 * s * s, &files.labels_sha256)?;
        Ok(SplitData { samples: files.samples, features, labels })
    }

    pub fn params(&self, split: Split) -> Result<Vec<SampleParams>> {
        let files = self.files(split)?;
        let path = self.root.join(split.as_str()).join("params.json");
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if sha256_hex(&bytes) != files.params_sha256 {
            return Err(Error::Format { path, reason: "digest mismatch".into() });
        }
        serde_json::from_slice(&bytes).map_err(|e| Error::Format { path, reason: e.to_string() })
    }
}

fn read_f32(path: &Path, expected: usize, digest: &str) -> Result<Vec<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 4 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("expected {} values, found {} bytes", expected, bytes.len()),
        });
    }
    if sha256_hex(&bytes) != digest {
        return Err(Error::Format { path: path.to_path_buf(), reason: "digest mismatch".into() });
    }
    Ok(bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect())
}

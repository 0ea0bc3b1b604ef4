//! `evaluate`: metric reports and figures for a checkpoint.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use qdgm_core::colormap::EncodedImage;
use qdgm_core::dataset::{Dataset, DatasetPreset, Split};
use qdgm_core::verification::MetricReport;
use qdgm_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::figures;
use crate::predict::{Prediction, Predictor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestSource {
    SyntheticTest,
    FtogMarginals,
    WignerTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub index: usize,
    pub l2_image: Option<f64>,
    pub l1_per_marginal: [f64; 3],
    pub peak_per_marginal: [f64; 3],
    pub relative_l1: [f64; 3],
    pub mean_relative_l1: f64,
    pub negativity_volume: f64,
    pub out_of_gamut_fraction: f64,
    pub axes_swapped: bool,
}

impl SampleMetrics {
    fn new(index: usize, r: &MetricReport) -> Self {
        Self {
            index,
            l2_image: r.l2_image,
            l1_per_marginal: r.l1_per_marginal,
            peak_per_marginal: r.peak_per_marginal,
            relative_l1: r.relative_l1(),
            mean_relative_l1: r.mean_relative_l1(),
            negativity_volume: r.negativity_volume,
            out_of_gamut_fraction: r.out_of_gamut_fraction,
            axes_swapped: r.axes_swapped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub source: TestSource,
    pub dataset: String,
    pub samples: usize,
    /// Samples whose decoded image was too far out of gamut to verify.
    pub unreliable: Vec<usize>,
    pub mean_l2_image: f64,
    pub mean_relative_l1: f64,
    pub mean_relative_l1_per_marginal: [f64; 3],
    pub max_relative_l1: f64,
    pub per_sample: Vec<SampleMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtogEntry {
    pub temperature: f64,
    pub file: String,
    pub metrics: SampleMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtogReport {
    pub source: TestSource,
    pub entries: Vec<FtogEntry>,
    /// `(temperature, negativity_volume)` in increasing temperature.
    pub negativity_by_temperature: Vec<(f64, f64)>,
    pub negativity_decreases_with_temperature: bool,
}

fn write_report<T: Serialize>(out: &Path, report: &T) -> Result<PathBuf> {
    let path = out.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(report)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn prediction_figures(p: &Prediction, gt: &qdgm_core::MarginalTriple, label: Option<&EncodedImage>, out: &Path, stem: &str) -> Result<()> {
    let scale = (256 / p.image.size as u32).max(1);
    figures::save(&figures::magnify(&figures::encoded(&p.image), scale), &out.join(format!("{stem}_predicted.png")))?;
    if let Some(img) = figures::negative_region(&p.joint, 256) {
        figures::save(&img, &out.join(format!("{stem}_negative_region.png")))?;
    }
    figures::save(&figures::marginal_overlay(gt, &p.marginals), &out.join(format!("{stem}_marginals.png")))?;
    if let Some(label) = label {
        figures::save(&figures::magnify(&figures::encoded(label), scale), &out.join(format!("{stem}_label.png")))?;
        figures::save(&figures::magnify(&figures::abs_difference(label, &p.image), scale), &out.join(format!("{stem}_abs_diff.png")))?;
    }
    Ok(())
}

/// Exact-GT evaluation over a dataset's test split; figures for the first
/// `figure_count` samples.
pub fn test_split(pred: &Predictor, source: TestSource, data: &Path, out: &Path, figure_count: usize) -> Result<TestReport> {
    let ds = Dataset::open(data)?;
    let m = &ds.manifest;
    match (source, m.preset) {
        (TestSource::WignerTest, DatasetPreset::Wigner) => {}
        (TestSource::SyntheticTest, p) if p.is_cher() => {}
        (TestSource::FtogMarginals, _) => bail!("FToG sources are evaluated with evaluate_ftog"),
        (s, p) => bail!("{s:?} cannot be evaluated on a {p} dataset"),
    }
    if m.colormap != pred.manifest.colormap || !m.joint_axis.same_as(&pred.manifest.joint_axis) || m.image_size != pred.manifest.image_size {
        bail!("dataset {} uses a different colour map or grid than the checkpoint", data.display());
    }
    let split = ds.load(Split::Test)?;
    std::fs::create_dir_all(out)?;
    let images = pred.images(&split.features)?;
    let mut per_sample = Vec::new();
    let mut unreliable = Vec::new();
    for (i, image) in images.into_iter().enumerate() {
        let gt = m.triple_from_feature(split.feature(i))?;
        let label = EncodedImage::from_f32(m.image_size, split.label(i))?;
        match pred.verify(image, &gt, Some(&label)) {
            Ok(p) => {
                if i < figure_count {
                    prediction_figures(&p, &gt, Some(&label), out, &format!("sample{i:03}"))?;
                }
                per_sample.push(SampleMetrics::new(i, &p.report));
            }
            Err(e) => match e.downcast_ref::<CoreError>() {
                Some(CoreError::Unreliable { .. }) => unreliable.push(i),
                _ => return Err(e),
            },
        }
    }
    let n = per_sample.len().max(1) as f64;
    let per_marginal = [0, 1, 2].map(|k| per_sample.iter().map(|s| s.relative_l1[k]).sum::<f64>() / n);
    let report = TestReport {
        source,
        dataset: m.digest()?,
        samples: split.samples,
        unreliable,
        mean_l2_image: per_sample.iter().filter_map(|s| s.l2_image).sum::<f64>() / n,
        mean_relative_l1: per_marginal.iter().sum::<f64>() / 3.0,
        mean_relative_l1_per_marginal: per_marginal,
        max_relative_l1: per_sample.iter().map(|s| s.mean_relative_l1).fold(0.0, f64::max),
        per_sample,
    };
    write_report(out, &report)?;
    Ok(report)
}

/// GT-deficient evaluation of FToG marginal files.
pub fn ftog(pred: &Predictor, files: &[PathBuf], out: &Path) -> Result<FtogReport> {
    if files.is_empty() {
        bail!("no FToG marginal files given");
    }
    std::fs::create_dir_all(out)?;
    let mut entries = Vec::new();
    for (i, file) in files.iter().enumerate() {
        let record = crate::ftog::load(file)?;
        let gt = record.triple()?;
        let p = pred.predict(&gt).with_context(|| format!("predicting {}", file.display()))?;
        prediction_figures(&p, &gt, None, out, &format!("T{}", record.temperature))?;
        entries.push(FtogEntry {
            temperature: record.temperature,
            file: file.display().to_string(),
            metrics: SampleMetrics::new(i, &p.report),
        });
    }
    let mut by_t: Vec<(f64, f64)> = entries.iter().map(|e| (e.temperature, e.metrics.negativity_volume)).collect();
    by_t.sort_by(|a, b| a.0.total_cmp(&b.0));
    let decreasing = by_t.windows(2).all(|w| w[1].1 < w[0].1);
    let report = FtogReport {
        source: TestSource::FtogMarginals,
        entries,
        negativity_by_temperature: by_t,
        negativity_decreases_with_temperature: decreasing,
    };
    write_report(out, &report)?;
    Ok(report)
}

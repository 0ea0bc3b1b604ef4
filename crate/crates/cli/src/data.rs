//! `gen-data`: build a dataset directory from a preset.

use std::path::Path;

use anyhow::{Context, Result};
use qdgm_core::dataset::{DatasetConfig, DatasetPlan, Manifest, MANIFEST_FILE};

use crate::run::RunManifest;

/// Writes the dataset and a `run.toml` next to its `manifest.toml`.
pub fn generate(cfg: &DatasetConfig, out: &Path) -> Result<Manifest> {
    let plan = DatasetPlan::build(cfg).context("planning dataset")?;
    let manifest = plan.write(out).with_context(|| format!("writing dataset to {}", out.display()))?;
    let mut run = RunManifest::new("gen-data", cfg)?;
    run.output(&out.join(MANIFEST_FILE))?;
    run.write(&out.join("run.toml"))?;
    Ok(manifest)
}

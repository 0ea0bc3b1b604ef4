//! `solve-ftog`: ground-truth CHER marginals over a temperature list.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qdgm_core::cher::{cher_marginal_triple, BathConfig, CherConfig, SpectralDensity};
use qdgm_core::export::{read_json, triple_records, write_json, FtogRecord};
use serde::Serialize;

use crate::run::RunManifest;

/// Temperatures of the two reference cases.
pub const DEFAULT_TEMPERATURES: [f64; 2] = [2.4, 3.6];

#[derive(Debug, Clone, Serialize)]
struct SolveConfig<'a> {
    spectral_density: &'a SpectralDensity,
    temperatures: &'a [f64],
    cher: &'a CherConfig,
}

pub fn record_path(out: &Path, temperature: f64) -> PathBuf {
    out.join(format!("ftog_T{temperature}.json"))
}

/// One JSON record per temperature under `out`. An empty list writes
/// nothing and returns an empty vector.
pub fn solve(sd: &SpectralDensity, temperatures: &[f64], out: &Path) -> Result<Vec<PathBuf>> {
    if temperatures.is_empty() {
        log::warn!("empty temperature list: nothing to solve");
        return Ok(Vec::new());
    }
    if let Some(t) = temperatures.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        bail!("temperature {t} must be finite and non-negative");
    }
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let cher = CherConfig::for_density(sd);
    let mut run = RunManifest::new("solve-ftog", &SolveConfig { spectral_density: sd, temperatures, cher: &cher })?;
    let mut paths = Vec::new();
    for &t in temperatures {
        let bath = BathConfig::new(t)?;
        let sol = cher_marginal_triple(sd, &bath, &cher).with_context(|| format!("solving T = {t}"))?;
        let record = FtogRecord {
            spectral_density: *sd,
            temperature: t,
            cher,
            axial: sol.axial,
            oblique: sol.oblique,
            marginals: triple_records(&sol.triple),
        };
        let path = record_path(out, t);
        write_json(&path, &record)?;
        log::info!("T = {t}: wrote {}", path.display());
        run.output(&path)?;
        paths.push(path);
    }
    run.write(&out.join("run.toml"))?;
    Ok(paths)
}

pub fn load(path: &Path) -> Result<FtogRecord> {
    read_json(path).with_context(|| format!("reading {}", path.display()))
}

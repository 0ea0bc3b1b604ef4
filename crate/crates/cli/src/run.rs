//! Run manifests and worker-pool setup shared by all commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qdgm_core::digest::sha256_hex;
use serde::Serialize;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "QDGM_WORKERS";

/// Sizes the global rayon pool from `QDGM_WORKERS` when set.
pub fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{WORKERS_ENV}={v:?} is not a count"))?;
        if n == 0 {
            anyhow::bail!("{WORKERS_ENV} must be positive");
        }
        // A pool built earlier in the same process wins; that only happens in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Effective configuration and file digests of one command run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: toml::Table,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C) -> Result<Self> {
        let config = toml::Table::try_from(config).context("serialising run configuration")?;
        Ok(Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).context("serialising run manifest")?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

//! JSON export of marginals with the settings that produced them.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cher::{CherConfig, InversionRecord, SpectralDensity};
use crate::error::{Error, Result};
use crate::grid::{AxisLabel, Marginal, MarginalTriple, UniformGrid};

/// One marginal with explicit abscissae.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalRecord {
    pub axis: AxisLabel,
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
}

impl From<&Marginal> for MarginalRecord {
    fn from(m: &Marginal) -> Self {
        Self { axis: m.axis, abscissae: m.grid.points(), values: m.values.clone() }
    }
}

impl MarginalRecord {
    pub fn to_marginal(&self) -> Result<Marginal> {
        let n = self.abscissae.len();
        if n < 2 {
            return Err(Error::shape("at least 2 abscissae", n));
        }
        let grid = UniformGrid::new(self.abscissae[0], self.abscissae[n - 1], n)?;
        let uniform = self.abscissae.iter().enumerate().all(|(i, &x)| (x - grid.point(i)).abs() <= 1e-9 * grid.max.abs().max(1.0));
        if !uniform {
            return Err(Error::Config(format!("abscissae of {} are not uniform", self.axis)));
        }
        Marginal::new(self.axis, grid, self.values.clone())
    }
}

/// Ground-truth CHER marginals at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtogRecord {
    pub spectral_density: SpectralDensity,
    pub temperature: f64,
    pub cher: CherConfig,
    pub axial: InversionRecord,
    pub oblique: InversionRecord,
    pub marginals: Vec<MarginalRecord>,
}

impl FtogRecord {
    pub fn triple(&self) -> Result<MarginalTriple> {
        if self.marginals.len() != 3 {
            return Err(Error::shape(3, self.marginals.len()));
        }
        Ok(MarginalTriple {
            first: self.marginals[0].to_marginal()?,
            second: self.marginals[1].to_marginal()?,
            oblique: self.marginals[2].to_marginal()?,
        })
    }
}

pub fn triple_records(t: &MarginalTriple) -> Vec<MarginalRecord> {
    t.iter().map(MarginalRecord::from).collect()
}

/// Write `value` as pretty JSON through a temporary file and rename.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format { path: path.to_path_buf(), reason: e.to_string() })?;
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format { path: path.to_path_buf(), reason: e.to_string() })
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

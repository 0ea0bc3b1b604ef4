//! Three-channel colour mapping of quasi-distribution heights and its inverse.
//!
//! A height `z` is rescaled to `zeta = (z + z_offset) / z_scale` and mapped to
//! `(f_R, f_G, f_B)`: R responds to positive heights, B to negative ones and G
//! peaks at `zeta0`, which is where `z = 0` lands for both presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{JointGrid, UniformGrid};

/// Number of `zeta` samples in the inverse lookup table.
pub const LUT_LEN: usize = 4096;
/// Colour distance beyond which a decoded pixel is out of gamut.
pub const GAMUT_DISTANCE: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorMapConfig {
    pub zeta0: f64,
    pub z_offset: f64,
    pub z_scale: f64,
}

impl ColorMapConfig {
    pub fn new(zeta0: f64, z_offset: f64, z_scale: f64) -> Result<Self> {
        if !(z_scale > 0.0) || !(0.0..=1.0).contains(&zeta0) {
            return Err(Error::Config(format!("bad colour map zeta0={zeta0} z_scale={z_scale}")));
        }
        Ok(Self { zeta0, z_offset, z_scale })
    }

    /// `zeta = (z + 0.45) / 0.9`, `zeta0 = 1/2`.
    pub fn wigner() -> Self {
        Self { zeta0: 0.5, z_offset: 0.45, z_scale: 0.9 }
    }

    /// `zeta = (z + 0.01) / 0.055`, `zeta0 = 1/5.5`.
    pub fn cher() -> Self {
        Self { zeta0: 1.0 / 5.5, z_offset: 0.01, z_scale: 0.055 }
    }

    /// Map with `z = 0` at `zeta0` and the given height span.
    pub fn anchored(zeta0: f64, z_scale: f64) -> Result<Self> {
        Self::new(zeta0, zeta0 * z_scale, z_scale)
    }

    pub fn zeta(&self, z: f64) -> f64 {
        (z + self.z_offset) / self.z_scale
    }

    pub fn height(&self, zeta: f64) -> f64 {
        zeta * self.z_scale - self.z_offset
    }

    /// Heights mapped onto `zeta` in `[0, 1]`.
    pub fn z_range(&self) -> (f64, f64) {
        (self.height(0.0), self.height(1.0))
    }
}

fn logistic_pair(a: f64, b: f64) -> f64 {
    1.0 / ((a.exp() + 1.0) * (b.exp() + 1.0))
}

/// Unclipped channel functions at `zeta`.
pub fn channels(zeta: f64, zeta0: f64) -> [f64; 3] {
    let r = 2.0 * 1.148 * logistic_pair(-25.0 * (zeta - (zeta0 - 0.12)), 5.0 * (zeta - (zeta0 + 0.45))) - 1.0;
    let d = zeta - zeta0;
    let g = 2.0 * (-(d * d) / 0.0392).exp() - 1.0;
    let b = 2.0 * 1.148 * logistic_pair(25.0 * (zeta - (zeta0 + 0.12)), -5.0 * (zeta - (zeta0 - 0.45))) - 1.0;
    [r, g, b]
}

/// Counters of values that left the nominal domain during encoding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeStats {
    /// Heights outside the `zeta` window, saturated to its edge.
    pub saturated: usize,
    /// Channel values clipped to `[-1, 1]`.
    pub clipped: usize,
}

impl EncodeStats {
    pub fn merge(&mut self, other: EncodeStats) {
        self.saturated += other.saturated;
        self.clipped += other.clipped;
    }
}

fn encode_zeta(zeta: f64, zeta0: f64, stats: &mut EncodeStats) -> [f64; 3] {
    let z = if (0.0..=1.0).contains(&zeta) {
        zeta
    } else {
        stats.saturated += 1;
        zeta.clamp(0.0, 1.0)
    };
    channels(z, zeta0).map(|c| {
        if c.abs() > 1.0 {
            stats.clipped += 1;
        }
        c.clamp(-1.0, 1.0)
    })
}

/// `(R, G, B)` for height `z`.
pub fn encode_height(z: f64, cfg: &ColorMapConfig) -> [f64; 3] {
    encode_zeta(cfg.zeta(z), cfg.zeta0, &mut EncodeStats::default())
}

/// Three square channel images, channel-major: `data[c * n * n + i * n + j]`
/// holds channel `c` at joint index `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedImage {
    pub size: usize,
    pub data: Vec<f64>,
}

impl EncodedImage {
    pub fn new(size: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 3 * size * size {
            return Err(Error::shape(3 * size * size, data.len()));
        }
        Ok(Self { size, data })
    }

    pub fn filled(size: usize, rgb: [f64; 3]) -> Self {
        let plane = size * size;
        let mut data = Vec::with_capacity(3 * plane);
        for c in rgb {
            data.extend(std::iter::repeat_n(c, plane));
        }
        Self { size, data }
    }

    pub fn from_f32(size: usize, data: &[f32]) -> Result<Self> {
        Self::new(size, data.iter().map(|&v| v as f64).collect())
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|&v| v as f32).collect()
    }

    pub fn pixel_count(&self) -> usize {
        self.data.len()
    }

    pub fn rgb(&self, i: usize, j: usize) -> [f64; 3] {
        let plane = self.size * self.size;
        let k = i * self.size + j;
        [self.data[k], self.data[plane + k], self.data[2 * plane + k]]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.size * self.size;
        &self.data[c * plane..(c + 1) * plane]
    }
}

/// Pixel-wise encoding of a square joint grid.
pub fn encode_grid(joint: &JointGrid, cfg: &ColorMapConfig) -> Result<(EncodedImage, EncodeStats)> {
    let n = joint.first.len;
    if joint.second.len != n {
        return Err(Error::shape(format!("{n}x{n}"), format!("{}x{}", n, joint.second.len)));
    }
    let plane = n * n;
    let mut data = vec![0.0; 3 * plane];
    let mut stats = EncodeStats::default();
    for (k, &z) in joint.values.iter().enumerate() {
        let rgb = encode_zeta(cfg.zeta(z), cfg.zeta0, &mut stats);
        for c in 0..3 {
            data[c * plane + k] = rgb[c];
        }
    }
    Ok((EncodedImage { size: n, data }, stats))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub z: f64,
    /// Colour distance between the input and the encoding of `z`.
    pub distance: f64,
}

impl Decoded {
    pub fn out_of_gamut(&self) -> bool {
        self.distance > GAMUT_DISTANCE
    }
}

/// Inverse colour map: nearest entry of a `zeta` lookup table followed by
/// Newton refinement of the squared colour distance.
#[derive(Debug, Clone)]
pub struct Decoder {
    cfg: ColorMapConfig,
    table: Vec<[f64; 3]>,
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

impl Decoder {
    pub fn new(cfg: ColorMapConfig) -> Self {
        let table = (0..LUT_LEN)
            .map(|k| channels(k as f64 / (LUT_LEN - 1) as f64, cfg.zeta0).map(|c| c.clamp(-1.0, 1.0)))
            .collect();
        Self { cfg, table }
    }

    pub fn config(&self) -> &ColorMapConfig {
        &self.cfg
    }

    fn curve(&self, zeta: f64) -> [f64; 3] {
        channels(zeta, self.cfg.zeta0).map(|c| c.clamp(-1.0, 1.0))
    }

    pub fn decode_rgb(&self, rgb: [f64; 3]) -> Decoded {
        let (best, _) = self
            .table
            .iter()
            .enumerate()
            .map(|(k, c)| (k, dist2(c, &rgb)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let step = 1.0 / (LUT_LEN - 1) as f64;
        let lo = (best as f64 - 1.0).max(0.0) * step;
        let hi = (best as f64 + 1.0).min((LUT_LEN - 1) as f64) * step;
        let objective = |zeta: f64| dist2(&self.curve(zeta), &rgb);
        let mut zeta = best as f64 * step;
        let h = 1e-5;
        for _ in 0..3 {
            let (fm, f0, fp) = (objective(zeta - h), objective(zeta), objective(zeta + h));
            let d1 = (fp - fm) / (2.0 * h);
            let d2 = (fp - 2.0 * f0 + fm) / (h * h);
            if !(d2 > 0.0) {
                break;
            }
            let next = (zeta - d1 / d2).clamp(lo, hi);
            if objective(next) > f0 {
                break;
            }
            zeta = next;
        }
        Decoded { z: self.cfg.height(zeta), distance: objective(zeta).sqrt() }
    }

    /// Decode every pixel onto the joint axes `first` x `second`.
    pub fn decode_image(&self, img: &EncodedImage, first: UniformGrid, second: UniformGrid) -> Result<DecodedImage> {
        if first.len != img.size || second.len != img.size {
            return Err(Error::shape(
                format!("{}x{}", first.len, second.len),
                format!("{0}x{0}", img.size),
            ));
        }
        let mut out_of_gamut = 0;
        let mut values = Vec::with_capacity(img.size * img.size);
        for i in 0..img.size {
            for j in 0..img.size {
                let d = self.decode_rgb(img.rgb(i, j));
                if d.out_of_gamut() {
                    out_of_gamut += 1;
                }
                values.push(d.z);
            }
        }
        Ok(DecodedImage { joint: JointGrid { first, second, values }, out_of_gamut })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedImage {
    pub joint: JointGrid,
    pub out_of_gamut: usize,
}

impl DecodedImage {
    pub fn out_of_gamut_fraction(&self) -> f64 {
        self.out_of_gamut as f64 / self.joint.values.len() as f64
    }
}

/// Smallest colour distance between curve samples more than `separation`
/// apart in `zeta`, over `samples` equally spaced points of `[0, 1]`.
pub fn injectivity_margin(cfg: &ColorMapConfig, samples: usize, separation: f64) -> f64 {
    let pts: Vec<(f64, [f64; 3])> = (0..samples)
        .map(|k| {
            let z = k as f64 / (samples - 1) as f64;
            (z, channels(z, cfg.zeta0).map(|c| c.clamp(-1.0, 1.0)))
        })
        .collect();
    let mut best = f64::INFINITY;
    for (a, pa) in &pts {
        for (b, pb) in &pts {
            if b - a > separation {
                best = best.min(dist2(pa, pb));
            }
        }
    }
    best.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn green_peaks_at_zeta0() {
        for cfg in [ColorMapConfig::wigner(), ColorMapConfig::cher()] {
            assert!((channels(cfg.zeta0, cfg.zeta0)[1] - 1.0).abs() < 1e-15);
            let g = channels(cfg.zeta0 + 0.14, cfg.zeta0)[1];
            assert!((g - (2.0 * (-0.5f64).exp() - 1.0)).abs() < 1e-12);
            assert!((g - 0.21306).abs() < 1e-5);
        }
    }

    #[test]
    fn red_vanishes_at_large_zeta() {
        assert!((channels(50.0, 0.5)[0] + 1.0).abs() < 1e-12);
        assert!((channels(-50.0, 0.5)[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_height_sits_on_zeta0() {
        for cfg in [ColorMapConfig::wigner(), ColorMapConfig::cher()] {
            assert!((cfg.zeta(0.0) - cfg.zeta0).abs() < 1e-15);
            let d = Decoder::new(cfg).decode_rgb(encode_height(0.0, &cfg));
            assert!(d.z.abs() < 1e-6 * cfg.z_scale);
        }
    }

    #[test]
    fn unit_green_decodes_to_zeta0() {
        let cfg = ColorMapConfig::cher();
        let d = Decoder::new(cfg).decode_rgb(channels(cfg.zeta0, cfg.zeta0));
        assert!((d.z - (cfg.zeta0 * cfg.z_scale - cfg.z_offset)).abs() < 1e-6 * cfg.z_scale);
    }

    #[test]
    fn no_clipping_inside_the_window() {
        let cfg = ColorMapConfig::wigner();
        let mut stats = EncodeStats::default();
        for k in 0..=10_000 {
            encode_zeta(k as f64 / 10_000.0, cfg.zeta0, &mut stats);
        }
        assert_eq!(stats, EncodeStats::default());
        encode_zeta(1.3, cfg.zeta0, &mut stats);
        assert_eq!(stats.saturated, 1);
    }

    #[test]
    fn off_curve_colour_is_flagged() {
        let d = Decoder::new(ColorMapConfig::wigner()).decode_rgb([-1.0, -1.0, -1.0]);
        assert!(d.out_of_gamut());
    }
}

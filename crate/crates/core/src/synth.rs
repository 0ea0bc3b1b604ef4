//! Signed Gaussian training distributions `p + A p' - A p''` with analytic
//! marginals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cher::{cher_marginal_triple, BathConfig, CherConfig, SpectralDensity};
use crate::error::{Error, Result};
use crate::grid::{AxisLabel, JointGrid, Marginal, MarginalTriple, UniformGrid};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Closed interval `[lo, hi]`; `lo == hi` pins the value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let r = Self { lo, hi };
        r.validate("range")?;
        Ok(r)
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::Config(format!("{name}: empty or inverted range [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }

    fn log_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            (rng.random_range(self.lo.ln()..=self.hi.ln())).exp()
        }
    }
}

/// Bivariate normal density over `(x1, x13)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: [f64; 2],
    pub sigma: [f64; 2],
    pub rho: f64,
}

impl GaussianComponent {
    pub fn new(mean: [f64; 2], sigma: [f64; 2], rho: f64) -> Result<Self> {
        if !(sigma[0] > 0.0 && sigma[1] > 0.0 && rho > -1.0 && rho < 1.0) || !mean.iter().all(|m| m.is_finite()) {
            return Err(Error::Config(format!("invalid Gaussian mean={mean:?} sigma={sigma:?} rho={rho}")));
        }
        Ok(Self { mean, sigma, rho })
    }

    pub fn standard() -> Self {
        Self { mean: [0.0, 0.0], sigma: [1.0, 1.0], rho: 0.0 }
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        let a = (x - self.mean[0]) / self.sigma[0];
        let b = (y - self.mean[1]) / self.sigma[1];
        let det = 1.0 - self.rho * self.rho;
        let q = (a * a - 2.0 * self.rho * a * b + b * b) / det;
        (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * self.sigma[0] * self.sigma[1] * det.sqrt())
    }

    /// Mean and standard deviation of the projection onto unit vector `e`.
    pub fn project(&self, e: [f64; 2]) -> (f64, f64) {
        let mean = e[0] * self.mean[0] + e[1] * self.mean[1];
        let (s0, s1) = (self.sigma[0], self.sigma[1]);
        let var = e[0] * e[0] * s0 * s0 + 2.0 * e[0] * e[1] * self.rho * s0 * s1 + e[1] * e[1] * s1 * s1;
        (mean, var.sqrt())
    }
}

fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    FRAC_1_SQRT_2PI / sd * (-0.5 * z * z).exp()
}

/// `p + A p' - A p''`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSample {
    pub p: GaussianComponent,
    pub p_prime: GaussianComponent,
    pub p_dprime: GaussianComponent,
    pub amplitude: f64,
}

impl SyntheticSample {
    pub fn plain(p: GaussianComponent) -> Self {
        Self { p, p_prime: p, p_dprime: p, amplitude: 0.0 }
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        let base = self.p.density(x, y);
        if self.amplitude == 0.0 {
            return base;
        }
        base + self.amplitude * (self.p_prime.density(x, y) - self.p_dprime.density(x, y))
    }

    /// Marginal density along unit direction `e` at coordinate `s`.
    pub fn marginal_at(&self, e: [f64; 2], s: f64) -> f64 {
        let term = |g: &GaussianComponent| {
            let (m, sd) = g.project(e);
            normal_pdf(s, m, sd)
        };
        let base = term(&self.p);
        if self.amplitude == 0.0 {
            return base;
        }
        base + self.amplitude * (term(&self.p_prime) - term(&self.p_dprime))
    }
}

/// Axes of one synthetic datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthGrids {
    pub joint: UniformGrid,
    pub first: UniformGrid,
    pub second: UniformGrid,
    pub oblique: UniformGrid,
}

impl SynthGrids {
    /// Square joint window of half-width `joint_half` with `size` pixels per
    /// side; marginal windows as in `cher`.
    pub fn new(joint_half: f64, size: usize, cher: &CherConfig) -> Result<Self> {
        Ok(Self {
            joint: UniformGrid::symmetric(joint_half, size)?,
            first: cher.x_grid()?,
            second: cher.x_grid()?,
            oblique: cher.u_grid()?,
        })
    }
}

/// Joint heights on the square grid `axis x axis`; first index is `x1`.
pub fn eval_joint(sample: &SyntheticSample, axis: &UniformGrid) -> JointGrid {
    JointGrid::from_fn(*axis, *axis, |x, y| sample.density(x, y))
}

pub const X1_AXIS: [f64; 2] = [1.0, 0.0];
pub const X13_AXIS: [f64; 2] = [0.0, 1.0];
pub const U_AXIS: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

/// Marginals along `x1`, `x13` and `u = (x1 + x13)/sqrt(2)` in closed form.
pub fn analytic_marginals(sample: &SyntheticSample, grids: &SynthGrids) -> Result<MarginalTriple> {
    let build = |axis: AxisLabel, e: [f64; 2], grid: &UniformGrid| {
        Marginal::new(axis, *grid, grid.points().into_iter().map(|s| sample.marginal_at(e, s)).collect())
    };
    Ok(MarginalTriple {
        first: build(AxisLabel::X1, X1_AXIS, &grids.first)?,
        second: build(AxisLabel::X13, X13_AXIS, &grids.second)?,
        oblique: build(AxisLabel::U, U_AXIS, &grids.oblique)?,
    })
}

/// Parameter ranges of the signed-Gaussian generator.
///
/// The lobes `p'` and `p''` sit on opposite sides of the main mean at
/// `+- d * (sigma1 cos psi, sigma13 sin psi)` with `psi` uniform; their widths
/// are `ratio * sigma` of the main component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub mean_x1: Range,
    pub mean_x13: Range,
    pub sigma: Range,
    pub rho: Range,
    pub lobe_distance: Range,
    pub lobe_ratio: Range,
    /// Sampled log-uniformly; `[0, 0]` gives ordinary Gaussians.
    pub amplitude: Range,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        self.mean_x1.validate("mean_x1")?;
        self.mean_x13.validate("mean_x13")?;
        self.sigma.validate("sigma")?;
        self.rho.validate("rho")?;
        self.lobe_distance.validate("lobe_distance")?;
        self.lobe_ratio.validate("lobe_ratio")?;
        self.amplitude.validate("amplitude")?;
        if self.sigma.lo <= 0.0 || self.lobe_ratio.lo <= 0.0 {
            return Err(Error::Config("sigma and lobe_ratio must be positive".into()));
        }
        if self.rho.lo <= -1.0 || self.rho.hi >= 1.0 {
            return Err(Error::Config("rho must lie inside (-1, 1)".into()));
        }
        if self.amplitude.lo < 0.0 || (self.amplitude.lo == 0.0 && self.amplitude.hi > 0.0) {
            return Err(Error::Config("amplitude range must be [0, 0] or strictly positive".into()));
        }
        Ok(())
    }

    /// Same ranges with `A = 0`.
    pub fn plain(&self) -> Self {
        Self { amplitude: Range::point(0.0), ..*self }
    }
}

/// Draw one sample from `cfg`, deterministically in `seed`.
pub fn sample_params(seed: u64, cfg: &SynthConfig) -> Result<SyntheticSample> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = [cfg.sigma.uniform(&mut rng), cfg.sigma.uniform(&mut rng)];
    let mean = [cfg.mean_x1.uniform(&mut rng), cfg.mean_x13.uniform(&mut rng)];
    let p = GaussianComponent::new(mean, sigma, cfg.rho.uniform(&mut rng))?;
    let amplitude = cfg.amplitude.log_uniform(&mut rng);
    if amplitude == 0.0 {
        return Ok(SyntheticSample::plain(p));
    }
    let d = cfg.lobe_distance.uniform(&mut rng);
    let psi = rng.random_range(0.0..std::f64::consts::TAU);
    let offset = [d * sigma[0] * psi.cos(), d * sigma[1] * psi.sin()];
    let mut lobe = |sign: f64| {
        let r = cfg.lobe_ratio.uniform(&mut rng);
        GaussianComponent::new(
            [mean[0] + sign * offset[0], mean[1] + sign * offset[1]],
            [r * sigma[0], r * sigma[1]],
            cfg.rho.uniform(&mut rng),
        )
    };
    let p_prime = lobe(1.0)?;
    let p_dprime = lobe(-1.0)?;
    Ok(SyntheticSample { p, p_prime, p_dprime, amplitude })
}

/// Shape summary of one FToG marginal triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalProfile {
    pub temperature: f64,
    pub peak_x1: f64,
    pub peak_x13: f64,
    pub std_x1: f64,
    pub std_x13: f64,
    pub std_u: f64,
    /// Half-maximum width of the `x1` marginal divided by `2 sqrt(2 ln 2)`.
    pub core_x1: f64,
}

fn half_max_sigma(m: &Marginal) -> f64 {
    let peak = m.peak();
    let xs = m.grid.points();
    let inside: Vec<f64> = xs.iter().zip(&m.values).filter(|(_, &v)| v >= 0.5 * peak).map(|(x, _)| *x).collect();
    (inside[inside.len() - 1] - inside[0]) / (8.0 * std::f64::consts::LN_2).sqrt()
}

pub fn profile_of(temperature: f64, triple: &MarginalTriple) -> MarginalProfile {
    MarginalProfile {
        temperature,
        peak_x1: triple.first.argmax(),
        peak_x13: triple.second.argmax(),
        std_x1: triple.first.moments().1,
        std_x13: triple.second.moments().1,
        std_u: triple.oblique.moments().1,
        core_x1: half_max_sigma(&triple.first),
    }
}

/// Temperatures at which presets are fitted.
pub const FIT_TEMPERATURES: [f64; 7] = [2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0];
/// Relative inflation applied to every fitted range.
pub const FIT_INFLATION: f64 = 0.25;

/// Ranges fitted to FToG profiles:
///
/// * main means: the span of marginal peak positions, widened on both sides
///   by `FIT_INFLATION` times the mean standard deviation;
/// * main widths: the span of marginal standard deviations, widened to
///   `[min / 1.25, max * 1.25]`;
/// * lobe widths: the span of core-to-tail width ratios, scaled likewise and
///   kept inside `[0.35, 1]`;
/// * correlation: from `std_u^2 = (s1^2 + s13^2 + 2 rho s1 s13) / 2`, clamped
///   to at most 0.9, and extended 0.9 below;
/// * lobe distance `[0.3, 1.5]` and `A` in `[0.05, 0.6]`, not fitted.
pub fn fit_config(profiles: &[MarginalProfile]) -> Result<SynthConfig> {
    if profiles.is_empty() {
        return Err(Error::Config("no profiles to fit".into()));
    }
    let span = |f: &dyn Fn(&MarginalProfile) -> f64| {
        profiles.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let k = 1.0 + FIT_INFLATION;
    let mean_std = profiles.iter().map(|p| 0.5 * (p.std_x1 + p.std_x13)).sum::<f64>() / profiles.len() as f64;
    let pad = FIT_INFLATION * mean_std;
    let (p1_lo, p1_hi) = span(&|p| p.peak_x1);
    let (p13_lo, p13_hi) = span(&|p| p.peak_x13);
    let (s_lo, s_hi) = span(&|p| p.std_x1.min(p.std_x13));
    let (_, s_hi2) = span(&|p| p.std_x1.max(p.std_x13));
    let (r_lo, r_hi) = span(&|p| p.core_x1 / p.std_x1);
    let (rho_lo, rho_hi) = span(&|p| {
        (2.0 * p.std_u * p.std_u - p.std_x1 * p.std_x1 - p.std_x13 * p.std_x13) / (2.0 * p.std_x1 * p.std_x13)
    });
    let rho_top = rho_hi.min(0.9);
    let cfg = SynthConfig {
        mean_x1: Range::new(p1_lo - pad, p1_hi + pad)?,
        mean_x13: Range::new(p13_lo - pad, p13_hi + pad)?,
        sigma: Range::new(s_lo / k, s_hi.max(s_hi2) * k)?,
        rho: Range::new((rho_lo.min(rho_top) - 0.9).max(-0.9), rho_top)?,
        lobe_distance: Range::new(0.3, 1.5)?,
        lobe_ratio: Range::new((r_lo / k).max(0.35), (r_hi * k).min(1.0))?,
        amplitude: Range::new(0.05, 0.6)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Solve the FToG marginals at [`FIT_TEMPERATURES`] and fit a preset to them.
pub fn fit_preset(sd: &SpectralDensity, cher: &CherConfig) -> Result<(SynthConfig, Vec<MarginalProfile>)> {
    let profiles = FIT_TEMPERATURES
        .iter()
        .map(|&t| {
            let sol = cher_marginal_triple(sd, &BathConfig::new(t)?, cher)?;
            Ok(profile_of(t, &sol.triple))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((fit_config(&profiles)?, profiles))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SynthConfig {
        SynthConfig {
            mean_x1: Range::new(-0.8, 0.1).unwrap(),
            mean_x13: Range::new(-0.1, 0.8).unwrap(),
            sigma: Range::new(1.1, 2.5).unwrap(),
            rho: Range::new(0.0, 0.9).unwrap(),
            lobe_distance: Range::new(0.3, 1.5).unwrap(),
            lobe_ratio: Range::new(0.35, 0.9).unwrap(),
            amplitude: Range::new(0.05, 0.6).unwrap(),
        }
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(sample_params(7, &cfg()).unwrap(), sample_params(7, &cfg()).unwrap());
        assert_ne!(sample_params(7, &cfg()).unwrap(), sample_params(8, &cfg()).unwrap());
    }

    #[test]
    fn zero_amplitude_range_gives_plain_gaussians() {
        let s = sample_params(3, &cfg().plain()).unwrap();
        assert_eq!(s.amplitude, 0.0);
        assert_eq!(s.p_prime, s.p);
    }

    #[test]
    fn inverted_range_is_rejected() {
        let bad = SynthConfig { sigma: Range { lo: 2.0, hi: 1.0 }, ..cfg() };
        assert!(matches!(sample_params(1, &bad), Err(Error::Config(_))));
        let bad = SynthConfig { amplitude: Range { lo: 0.0, hi: 0.5 }, ..cfg() };
        assert!(sample_params(1, &bad).is_err());
    }

    #[test]
    fn standard_normal_peak() {
        let s = SyntheticSample::plain(GaussianComponent::standard());
        assert!((s.density(0.0, 0.0) - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!((s.marginal_at(U_AXIS, 0.7) - normal_pdf(0.7, 0.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn equal_lobes_cancel() {
        let p = GaussianComponent::new([0.2, -0.1], [1.3, 0.8], 0.4).unwrap();
        let lobe = GaussianComponent::new([1.0, 1.0], [0.5, 0.5], 0.0).unwrap();
        let s = SyntheticSample { p, p_prime: lobe, p_dprime: lobe, amplitude: 0.5 };
        for &(x, y) in &[(0.0, 0.0), (1.0, 1.0), (-2.0, 0.3)] {
            assert_eq!(s.density(x, y), p.density(x, y));
        }
    }
}

//! Dephasing factors of the qubit pair coupled to a common boson bath, and
//! their inversion into the three CHER marginals.
//!
//! Conventions: `hbar = k_B = 1`, frequencies and temperatures in the units
//! of the bath cut-off (`omega_c` or `gamma`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AxisLabel, Marginal, MarginalTriple, UniformGrid, MARGINAL_LEN};
use crate::interp::CubicSpline;
use crate::quadrature::{integrate, integrate_to_infinity, QuadOptions};

/// Largest `|phi(t_max)|` accepted by the inversion.
pub const ALIASING_LIMIT: f64 = 1e-3;
/// Largest imaginary residue of an inverted marginal that is silently dropped.
pub const RESIDUE_LIMIT: f64 = 1e-6;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Bath coupling weight `J(omega)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralDensity {
    SuperOhmic { eta: f64, s: f64, omega_c: f64 },
    DrudeLorentz { eta: f64, gamma: f64 },
}

impl SpectralDensity {
    pub fn super_ohmic(eta: f64, s: f64, omega_c: f64) -> Result<Self> {
        let sd = SpectralDensity::SuperOhmic { eta, s, omega_c };
        sd.validate()?;
        Ok(sd)
    }

    pub fn drude_lorentz(eta: f64, gamma: f64) -> Result<Self> {
        let sd = SpectralDensity::DrudeLorentz { eta, gamma };
        sd.validate()?;
        Ok(sd)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SpectralDensity::SuperOhmic { eta, s, omega_c } => eta > 0.0 && s > 1.0 && omega_c > 0.0,
            SpectralDensity::DrudeLorentz { eta, gamma } => eta > 0.0 && gamma > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid spectral density {self:?}")))
        }
    }

    pub fn eta(&self) -> f64 {
        match *self {
            SpectralDensity::SuperOhmic { eta, .. } | SpectralDensity::DrudeLorentz { eta, .. } => eta,
        }
    }

    /// Characteristic frequency: `omega_c` or `gamma`.
    pub fn scale(&self) -> f64 {
        match *self {
            SpectralDensity::SuperOhmic { omega_c, .. } => omega_c,
            SpectralDensity::DrudeLorentz { gamma, .. } => gamma,
        }
    }

    /// `J(omega)` without domain checks; zero for `omega <= 0`.
    pub fn eval(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        match *self {
            SpectralDensity::SuperOhmic { eta, s, omega_c } => {
                let r = omega / omega_c;
                eta * omega_c * r.powf(s) * (-r).exp()
            }
            SpectralDensity::DrudeLorentz { eta, gamma } => {
                2.0 * eta * gamma / std::f64::consts::PI * omega / (omega * omega + gamma * gamma)
            }
        }
    }

    /// Frequency beyond which the integrands are either negligible
    /// (super-Ohmic) or handled by the algebraic tail treatment.
    fn cutoff(&self) -> f64 {
        match *self {
            SpectralDensity::SuperOhmic { s, omega_c, .. } => omega_c * (30.0 + 4.0 * s),
            SpectralDensity::DrudeLorentz { gamma, .. } => 200.0 * gamma,
        }
    }

    fn algebraic_tail(&self) -> bool {
        matches!(self, SpectralDensity::DrudeLorentz { .. })
    }
}

/// `J(omega)` for `omega >= 0`.
pub fn spectral_density(omega: f64, sd: &SpectralDensity) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!("spectral density needs omega >= 0, got {omega}")));
    }
    Ok(sd.eval(omega))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathConfig {
    pub temperature: f64,
}

impl BathConfig {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature >= 0.0 && temperature.is_finite()) {
            return Err(Error::Config(format!("temperature must be >= 0, got {temperature}")));
        }
        Ok(Self { temperature })
    }

    /// `coth(omega / 2T)`, equal to 1 at zero temperature.
    pub fn thermal_factor(&self, omega: f64) -> f64 {
        if self.temperature == 0.0 {
            return 1.0;
        }
        let y = omega / (2.0 * self.temperature);
        if y > 20.0 {
            1.0 + 2.0 * (-2.0 * y).exp()
        } else {
            1.0 / y.tanh()
        }
    }
}

/// `x - sin(x)` without cancellation for small `x`.
fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 0.25 {
        let x2 = x * x;
        x * x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 * (1.0 / 362_880.0 - x2 / 39_916_800.0))))
    } else {
        x - x.sin()
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be finite and >= 0, got {t}")))
    }
}

fn quad_options() -> QuadOptions {
    QuadOptions { rel_tol: 1e-8, abs_tol: 1e-15, max_intervals: 5_000 }
}

/// Breakpoints on `[0, upper]`: the bath features plus one panel per
/// oscillation period of `cos(omega t)`.
fn breakpoints(sd: &SpectralDensity, temperature: f64, t: f64, upper: f64) -> Vec<f64> {
    let mut pts = vec![0.0, upper];
    for f in [2.0 * temperature, sd.scale(), 0.1 * sd.scale()] {
        if f > 0.0 && f < upper {
            pts.push(f);
        }
    }
    let period = TWO_PI / t;
    let panels = (upper / period).floor() as usize;
    pts.extend((1..=panels).map(|k| k as f64 * period).filter(|&w| w < upper));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * upper);
    pts
}

fn finite_difference(g: &impl Fn(f64) -> f64, w: f64) -> f64 {
    let h = 1e-4 * w;
    (g(w + h) - g(w - h)) / (2.0 * h)
}

/// Dephasing phase `theta(t) = 4 int_0^inf J(w)/w^2 (w t - sin w t) dw`.
pub fn theta(t: f64, sd: &SpectralDensity) -> Result<f64> {
    check_time(t)?;
    sd.validate()?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let upper = sd.cutoff().max(if sd.algebraic_tail() { 2000.0 / t } else { 0.0 });
    let pts = breakpoints(sd, 0.0, t, upper);
    let opts = QuadOptions { max_intervals: pts.len() * 8 + 20_000, ..quad_options() };
    let body = integrate(
        |w| {
            let j = sd.eval(w);
            j / (w * w) * x_minus_sin(w * t)
        },
        &pts,
        &opts,
    )?;
    let mut total = body.value;
    if sd.algebraic_tail() {
        let linear = integrate_to_infinity(|w| sd.eval(w) / w, upper, &quad_options())?;
        let g = |w: f64| sd.eval(w) / (w * w);
        let (s, c) = (upper * t).sin_cos();
        let oscillating = g(upper) * c / t - finite_difference(&g, upper) * s / (t * t);
        total += t * linear.value - oscillating;
    }
    Ok(4.0 * total)
}

/// Decoherence exponent `Phi(t) = 4 int_0^inf J(w)/w^2 coth(w/2T) (1 - cos w t) dw`.
pub fn phi_decoherence(t: f64, sd: &SpectralDensity, bath: &BathConfig) -> Result<f64> {
    check_time(t)?;
    sd.validate()?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let upper = sd
        .cutoff()
        .max(if sd.algebraic_tail() { (2000.0 / t).max(40.0 * bath.temperature) } else { 0.0 });
    let pts = breakpoints(sd, bath.temperature, t, upper);
    let opts = QuadOptions { max_intervals: pts.len() * 8 + 20_000, ..quad_options() };
    let body = integrate(
        |w| {
            let half = (0.5 * w * t).sin();
            sd.eval(w) / (w * w) * bath.thermal_factor(w) * 2.0 * half * half
        },
        &pts,
        &opts,
    )?;
    let mut total = body.value;
    if sd.algebraic_tail() {
        let g = |w: f64| sd.eval(w) / (w * w) * bath.thermal_factor(w);
        let flat = integrate_to_infinity(g, upper, &quad_options())?;
        let (s, c) = (upper * t).sin_cos();
        let oscillating = -g(upper) * s / t - finite_difference(&g, upper) * c / (t * t);
        total += flat.value - oscillating;
    }
    Ok(4.0 * total)
}

/// Dephasing factors on a uniform time grid starting at zero.
///
/// `phi6` is identically one and is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingTrace {
    pub times: UniformGrid,
    pub phi1: Vec<Complex64>,
    pub phi9: Vec<Complex64>,
    pub phi13: Vec<Complex64>,
}

impl DephasingTrace {
    fn from_phases(times: UniformGrid, phases: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut phi1 = Vec::with_capacity(times.len);
        let mut phi9 = Vec::with_capacity(times.len);
        let mut phi13 = Vec::with_capacity(times.len);
        for (th, ph) in phases {
            let f1 = Complex64::from_polar((-ph).exp(), th);
            phi1.push(f1);
            phi13.push(f1.conj());
            phi9.push(Complex64::new((-4.0 * ph).exp(), 0.0));
        }
        Self { times, phi1, phi9, phi13 }
    }

    pub fn phi6(&self) -> Vec<Complex64> {
        vec![Complex64::new(1.0, 0.0); self.times.len]
    }
}

fn check_time_grid(times: &UniformGrid) -> Result<()> {
    if times.min != 0.0 {
        return Err(Error::Domain(format!("time grid must start at 0, starts at {}", times.min)));
    }
    Ok(())
}

/// Dephasing factors with every sample computed by direct quadrature.
pub fn dephasing_factors(times: &UniformGrid, sd: &SpectralDensity, bath: &BathConfig) -> Result<DephasingTrace> {
    check_time_grid(times)?;
    let phases = times
        .points()
        .into_iter()
        .map(|t| Ok((theta(t, sd)?, phi_decoherence(t, sd, bath)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DephasingTrace::from_phases(*times, phases.into_iter()))
}

/// `theta` and `Phi` tabulated by quadrature at anchors equally spaced in
/// `asinh(t)` and interpolated by a natural cubic spline.
///
/// Anchors are mirrored to negative times (theta is odd, Phi even), so the
/// spline has no artificial boundary at `t = 0`.
#[derive(Debug, Clone)]
pub struct PhaseProfile {
    theta: CubicSpline,
    phi: CubicSpline,
    t_end: f64,
}

/// Extra anchors past the requested end, so the natural end condition does
/// not leak into the used range.
const PROFILE_MARGIN: usize = 12;

impl PhaseProfile {
    pub fn tabulate(sd: &SpectralDensity, bath: &BathConfig, t_end: f64, step: f64) -> Result<Self> {
        check_time(t_end)?;
        if !(step > 0.0 && step < 0.5) {
            return Err(Error::Config(format!("profile step must lie in (0, 0.5), got {step}")));
        }
        let k_max = (t_end.asinh() / step).ceil() as usize + PROFILE_MARGIN;
        let mut th = Vec::with_capacity(k_max + 1);
        let mut ph = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let t = (k as f64 * step).sinh();
            th.push(theta(t, sd)?);
            ph.push(phi_decoherence(t, sd, bath)?);
        }
        let knots: Vec<f64> = (-(k_max as i64)..=k_max as i64).map(|k| k as f64 * step).collect();
        let mirror = |v: &[f64], sign: f64| -> Vec<f64> {
            v.iter().rev().map(|x| sign * x).chain(v[1..].iter().copied()).collect()
        };
        Ok(Self {
            theta: CubicSpline::new(knots.clone(), mirror(&th, -1.0))?,
            phi: CubicSpline::new(knots, mirror(&ph, 1.0))?,
            t_end,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.theta.eval(t.asinh())
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.phi.eval(t.asinh())
    }

    /// Dephasing factors on `times` interpolated from this profile.
    pub fn trace(&self, times: &UniformGrid) -> Result<DephasingTrace> {
        check_time_grid(times)?;
        if times.max > self.t_end * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "time grid ends at {} beyond the tabulated range {}",
                times.max, self.t_end
            )));
        }
        let phases = times.points().into_iter().map(|t| (self.theta(t), self.phi(t)));
        Ok(DephasingTrace::from_phases(*times, phases))
    }
}

/// Invert `phi(t) = int p(x) exp(-i s x t) dx` for the real density `p`,
/// sampled at the points of `out_grid`.
///
/// `phi` holds samples at the points of `times` (which must start at 0);
/// negative times follow from `phi(-t) = conj(phi(t))`. The inverse is the
/// trapezoidal sum of the Hermitian-extended transform evaluated directly at
/// each output abscissa.
pub fn marginal_from_characteristic(
    phi: &[Complex64],
    times: &UniformGrid,
    axis_scale: f64,
    out_grid: &UniformGrid,
    axis: AxisLabel,
) -> Result<Marginal> {
    check_time_grid(times)?;
    if phi.len() != times.len {
        return Err(Error::shape(times.len, phi.len()));
    }
    if !(axis_scale > 0.0) {
        return Err(Error::Config(format!("axis scale must be positive, got {axis_scale}")));
    }
    let dt = times.step();
    let nyquist = std::f64::consts::PI / (2.0 * dt * axis_scale);
    let requested = out_grid.min.abs().max(out_grid.max.abs());
    if requested > nyquist * (1.0 + 1e-12) {
        return Err(Error::Nyquist { requested, nyquist });
    }
    let residue = axis_scale * dt * phi[0].im.abs() / TWO_PI;
    if residue > RESIDUE_LIMIT || (phi[0].re - 1.0).abs() > RESIDUE_LIMIT {
        return Err(Error::InversionInconsistency { residue: residue.max((phi[0].re - 1.0).abs()) });
    }

    let one = Complex64::new(1.0, 0.0);
    if phi.iter().all(|z| (z - one).norm() <= 1e-12) {
        // Non-decaying unit factor: the density is a point mass at the origin.
        let mut values = vec![0.0; out_grid.len];
        let step = out_grid.step();
        let index = ((0.0 - out_grid.min) / step).round();
        if index >= 0.0 && (index as usize) < out_grid.len {
            values[index as usize] = 1.0 / step;
        }
        return Marginal::new(axis, *out_grid, values);
    }
    let tail = phi[phi.len() - 1].norm();
    if tail > ALIASING_LIMIT {
        return Err(Error::Aliasing { t_max: times.max, magnitude: tail });
    }

    let n = phi.len() - 1;
    let prefactor = axis_scale * dt / std::f64::consts::PI;
    let values = out_grid
        .points()
        .into_iter()
        .map(|x| {
            let w = axis_scale * x * dt;
            let rot = Complex64::from_polar(1.0, w);
            let mut z = one;
            let mut acc = 0.5 * phi[0].re;
            for (k, f) in phi.iter().enumerate().skip(1) {
                if k % 256 == 0 {
                    z = Complex64::from_polar(1.0, w * k as f64);
                } else {
                    z *= rot;
                }
                let term = (f * z).re;
                acc += if k == n { 0.5 * term } else { term };
            }
            prefactor * acc
        })
        .collect();
    Marginal::new(axis, *out_grid, values)
}

/// Forward transform `int p(x) exp(-i s x t) dx` of a sampled marginal (trapezoid).
pub fn characteristic_from_marginal(m: &Marginal, axis_scale: f64, t: f64) -> Complex64 {
    let weights: Vec<Complex64> = m
        .grid
        .points()
        .into_iter()
        .zip(&m.values)
        .map(|(x, &v)| Complex64::from_polar(v, -axis_scale * x * t))
        .collect();
    let h = m.grid.step();
    let inner: Complex64 = weights[1..weights.len() - 1].iter().sum();
    h * (inner + 0.5 * (weights[0] + weights[weights.len() - 1]))
}

/// Numerical settings for [`cher_marginal_triple`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CherConfig {
    /// Half-width of the `x1` / `x13` window.
    pub window_x: f64,
    /// Half-width of the `u` window.
    pub window_u: f64,
    /// Target `|phi(t_max)|`.
    pub decay_threshold: f64,
    pub min_samples: usize,
    /// Anchor spacing of the tabulated phase profile, in `asinh(t)`.
    pub profile_step: f64,
    /// Longest time searched for decay, in units of `1 / scale`.
    pub max_time: f64,
}

impl CherConfig {
    /// Windows wide enough to hold the marginal mass for `T` between 2 and 5.
    pub fn for_density(sd: &SpectralDensity) -> Self {
        let half = match sd {
            SpectralDensity::SuperOhmic { .. } => 12.0,
            SpectralDensity::DrudeLorentz { .. } => 20.0,
        } * sd.scale();
        Self {
            window_x: half,
            window_u: half,
            decay_threshold: 1e-6,
            min_samples: 4096,
            profile_step: 0.02,
            max_time: 32_768.0,
        }
    }

    pub fn x_grid(&self) -> Result<UniformGrid> {
        UniformGrid::symmetric(self.window_x, MARGINAL_LEN)
    }

    pub fn u_grid(&self) -> Result<UniformGrid> {
        UniformGrid::symmetric(self.window_u, MARGINAL_LEN)
    }
}

/// Time grid actually used for one inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionRecord {
    pub t_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CherSolution {
    /// `(p1(x1), p13(x13), p(u))`.
    pub triple: MarginalTriple,
    pub axial: InversionRecord,
    pub oblique: InversionRecord,
}

/// Smallest time at which `exp(-weight * Phi(t)) <= threshold`, found by
/// doubling then bisection.
pub fn decay_time(sd: &SpectralDensity, bath: &BathConfig, weight: f64, cfg: &CherConfig) -> Result<f64> {
    let target = -cfg.decay_threshold.ln() / weight;
    let cap = cfg.max_time / sd.scale();
    let mut lo = 0.0;
    let mut hi = 8.0 / sd.scale();
    loop {
        let value = phi_decoherence(hi, sd, bath)?;
        if value >= target {
            break;
        }
        lo = hi;
        if hi >= cap {
            let magnitude = (-weight * value).exp();
            if magnitude > ALIASING_LIMIT {
                return Err(Error::Aliasing { t_max: hi, magnitude });
            }
            return Ok(hi);
        }
        hi = (2.0 * hi).min(cap);
    }
    for _ in 0..14 {
        let mid = 0.5 * (lo + hi);
        if phi_decoherence(mid, sd, bath)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn sample_count(cfg: &CherConfig, axis_scale: f64, half_width: f64, t_max: f64) -> usize {
    let needed = (2.0 * axis_scale * half_width * t_max / std::f64::consts::PI).ceil() as usize + 1;
    needed.next_power_of_two().max(cfg.min_samples)
}

/// The three ground-truth marginals for a bath at temperature `T`:
/// `p1(x1)` from `phi1`, `p13(x13)` from `phi13` and `p(u)` from `phi9`
/// with the `sqrt(2)` scale of the oblique axis.
pub fn cher_marginal_triple(sd: &SpectralDensity, bath: &BathConfig, cfg: &CherConfig) -> Result<CherSolution> {
    sd.validate()?;
    let x_grid = cfg.x_grid()?;
    let u_grid = cfg.u_grid()?;
    let sqrt2 = std::f64::consts::SQRT_2;

    let t_axial = decay_time(sd, bath, 1.0, cfg)?;
    let t_oblique = decay_time(sd, bath, 4.0, cfg)?;
    let profile = PhaseProfile::tabulate(sd, bath, t_axial.max(t_oblique), cfg.profile_step)?;

    let n_axial = sample_count(cfg, 1.0, cfg.window_x, t_axial);
    let axial_times = UniformGrid::new(0.0, t_axial, n_axial)?;
    let axial = profile.trace(&axial_times)?;
    let first = marginal_from_characteristic(&axial.phi1, &axial_times, 1.0, &x_grid, AxisLabel::X1)?;
    let second = marginal_from_characteristic(&axial.phi13, &axial_times, 1.0, &x_grid, AxisLabel::X13)?;

    let n_oblique = sample_count(cfg, sqrt2, cfg.window_u, t_oblique);
    let oblique_times = UniformGrid::new(0.0, t_oblique, n_oblique)?;
    let oblique_trace = profile.trace(&oblique_times)?;
    let oblique = marginal_from_characteristic(&oblique_trace.phi9, &oblique_times, sqrt2, &u_grid, AxisLabel::U)?;

    Ok(CherSolution {
        triple: MarginalTriple { first, second, oblique },
        axial: InversionRecord { t_max: t_axial, samples: n_axial },
        oblique: InversionRecord { t_max: t_oblique, samples: n_oblique },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn so() -> SpectralDensity {
        SpectralDensity::super_ohmic(0.1, 2.0, 1.0).unwrap()
    }

    fn dl() -> SpectralDensity {
        SpectralDensity::drude_lorentz(0.1, 1.0).unwrap()
    }

    fn bath(t: f64) -> BathConfig {
        BathConfig::new(t).unwrap()
    }

    #[test]
    fn spectral_density_values() {
        assert_eq!(spectral_density(0.0, &so()).unwrap(), 0.0);
        assert_eq!(spectral_density(0.0, &dl()).unwrap(), 0.0);
        assert!((spectral_density(1.0, &so()).unwrap() - 0.1 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((spectral_density(1.0, &dl()).unwrap() - 0.1 / std::f64::consts::PI).abs() < 1e-15);
        assert!(matches!(spectral_density(-1.0, &so()), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(SpectralDensity::super_ohmic(0.1, 1.0, 1.0).is_err());
        assert!(SpectralDensity::super_ohmic(0.0, 2.0, 1.0).is_err());
        assert!(SpectralDensity::drude_lorentz(0.1, -1.0).is_err());
        assert!(BathConfig::new(-0.1).is_err());
    }

    #[test]
    fn zero_temperature_closed_forms() {
        for &(t, th, ph) in &[(1.0, 0.2, 0.2), (2.0, 0.64, 0.32)] {
            assert!((theta(t, &so()).unwrap() - th).abs() < 1e-9 * th);
            assert!((phi_decoherence(t, &so(), &bath(0.0)).unwrap() - ph).abs() < 1e-9 * ph);
        }
        assert_eq!(theta(0.0, &so()).unwrap(), 0.0);
        assert_eq!(phi_decoherence(0.0, &dl(), &bath(3.0)).unwrap(), 0.0);
    }

    #[test]
    fn drude_lorentz_theta_closed_form() {
        // 4 eta (t - (1 - exp(-gamma t)) / gamma)
        for &t in &[0.3, 1.0, 7.5, 40.0] {
            let exact = 0.4 * (t - (1.0 - (-t as f64).exp()));
            let got = theta(t, &dl()).unwrap();
            assert!((got - exact).abs() < 1e-7 * exact, "t={t}: {got} vs {exact}");
        }
    }

    #[test]
    fn warmer_bath_decoheres_faster() {
        let cold = phi_decoherence(1.0, &so(), &bath(0.0)).unwrap();
        let warm = phi_decoherence(1.0, &so(), &bath(3.6)).unwrap();
        assert!(warm > cold);
        let dl_cold = phi_decoherence(2.0, &dl(), &bath(2.4)).unwrap();
        let dl_warm = phi_decoherence(2.0, &dl(), &bath(3.6)).unwrap();
        assert!(dl_warm > dl_cold);
    }

    #[test]
    fn factors_at_origin_and_closed_form() {
        let times = UniformGrid::new(0.0, 2.0, 3).unwrap();
        let trace = dephasing_factors(&times, &so(), &bath(0.0)).unwrap();
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(trace.phi1[0], one);
        assert_eq!(trace.phi9[0], one);
        assert_eq!(trace.phi13[0], one);
        assert!((trace.phi9[1].re - (-0.8f64).exp()).abs() < 1e-9);
        assert!(trace.phi6().iter().all(|&z| z == one));
        for k in 0..3 {
            assert_eq!(trace.phi13[k], trace.phi1[k].conj());
            assert!((trace.phi9[k].re - trace.phi1[k].norm().powi(4)).abs() < 1e-14);
        }
    }

    #[test]
    fn profile_matches_direct_quadrature() {
        let b = bath(2.4);
        let profile = PhaseProfile::tabulate(&so(), &b, 300.0, 0.02).unwrap();
        for &t in &[0.013, 0.5, 1.7, 9.3, 47.0, 181.0, 299.0] {
            let th = theta(t, &so()).unwrap();
            let ph = phi_decoherence(t, &so(), &b).unwrap();
            assert!((profile.theta(t) - th).abs() < 1e-8 * th.max(1.0), "theta at {t}");
            assert!((profile.phi(t) - ph).abs() < 1e-8 * ph.max(1.0), "phi at {t}");
        }
    }

    fn gaussian_trace(mean: f64, sigma: f64, t_max: f64, n: usize) -> (UniformGrid, Vec<Complex64>) {
        let times = UniformGrid::new(0.0, t_max, n).unwrap();
        let phi = times
            .points()
            .into_iter()
            .map(|t| Complex64::from_polar((-0.5 * sigma * sigma * t * t).exp(), -mean * t))
            .collect();
        (times, phi)
    }

    fn normal(x: f64, mean: f64, sigma: f64) -> f64 {
        (-0.5 * ((x - mean) / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    }

    #[test]
    fn gaussian_pairs_invert() {
        let grid = UniformGrid::symmetric(3.0, MARGINAL_LEN).unwrap();
        for &(mean, sigma) in &[(0.0, 1.0), (0.5, 0.3)] {
            let (times, phi) = gaussian_trace(mean, sigma, 8.0 / sigma, 4096);
            let m = marginal_from_characteristic(&phi, &times, 1.0, &grid, AxisLabel::X1).unwrap();
            let err = grid
                .points()
                .iter()
                .zip(&m.values)
                .map(|(&x, v)| (v - normal(x, mean, sigma)).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-6, "mean {mean} sigma {sigma}: {err}");
        }
    }

    #[test]
    fn unit_factor_is_a_point_mass() {
        let times = UniformGrid::new(0.0, 40.0, 4096).unwrap();
        let grid = UniformGrid::symmetric(3.0, MARGINAL_LEN).unwrap();
        let phi = vec![Complex64::new(1.0, 0.0); 4096];
        let m = marginal_from_characteristic(&phi, &times, 1.0, &grid, AxisLabel::U).unwrap();
        assert!((m.values[360] * grid.step() - 1.0).abs() < 1e-12);
        assert_eq!(m.values.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn inversion_errors() {
        let grid = UniformGrid::symmetric(3.0, MARGINAL_LEN).unwrap();
        let (times, phi) = gaussian_trace(0.0, 0.05, 8.0, 4096);
        assert!(matches!(
            marginal_from_characteristic(&phi, &times, 1.0, &grid, AxisLabel::X1),
            Err(Error::Aliasing { .. })
        ));
        let (times, phi) = gaussian_trace(0.0, 1.0, 8.0, 16);
        assert!(matches!(
            marginal_from_characteristic(&phi, &times, 1.0, &grid, AxisLabel::X1),
            Err(Error::Nyquist { .. })
        ));
        let (times, mut phi) = gaussian_trace(0.0, 1.0, 8.0, 4096);
        phi[0] = Complex64::new(1.0, 0.5);
        assert!(matches!(
            marginal_from_characteristic(&phi, &times, 1.0, &grid, AxisLabel::X1),
            Err(Error::InversionInconsistency { .. })
        ));
    }

    #[test]
    fn round_trip_gaussian() {
        let grid = UniformGrid::symmetric(8.0, MARGINAL_LEN).unwrap();
        let (times, phi) = gaussian_trace(0.4, 0.9, 9.0, 4096);
        let m = marginal_from_characteristic(&phi, &times, 1.0, &grid, AxisLabel::X1).unwrap();
        for (t, f) in times.points().iter().zip(&phi).step_by(97) {
            let back = characteristic_from_marginal(&m, 1.0, *t);
            assert!((back - f).norm() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn cold_super_ohmic_oblique_factor_does_not_decay() {
        let cfg = CherConfig { max_time: 256.0, ..CherConfig::for_density(&so()) };
        assert!(matches!(cher_marginal_triple(&so(), &bath(0.0), &cfg), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn warm_super_ohmic_triple() {
        let sol = cher_marginal_triple(&so(), &bath(3.6), &CherConfig::for_density(&so())).unwrap();
        for m in sol.triple.iter() {
            assert!((m.integral() - 1.0).abs() < 1e-3, "{}: {}", m.axis, m.integral());
        }
        let (a, b) = (&sol.triple.first.values, &sol.triple.second.values);
        for i in 0..MARGINAL_LEN {
            assert!((a[i] - b[MARGINAL_LEN - 1 - i]).abs() < 1e-8);
        }
        // The bath shifts the x1 peak to negative frequencies.
        assert!(sol.triple.first.argmax() < 0.0);
        assert!(sol.triple.second.argmax() > 0.0);
    }
}

//! Noisy coherent and cat states in a truncated Fock basis, their Wigner
//! functions and quadrature marginals.
//!
//! Quadratures are `x = (a + a^dag) / sqrt(2)`, `p = (a - a^dag) / (i sqrt(2))`,
//! so the vacuum Wigner function is `exp(-x^2 - p^2) / pi`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AxisLabel, JointGrid, Marginal, MarginalTriple, UniformGrid, MARGINAL_LEN};

/// Default truncation for the parameter ranges used here.
pub const DEFAULT_N_CUT: usize = 60;

const TAIL_LIMIT: f64 = 1e-6;
const TRACE_TOL: f64 = 1e-8;
const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Coherent,
    Cat,
}

/// A coherent state `|alpha>` or cat state `|alpha> + e^{i theta}|-alpha>`
/// sent through a thermal attenuator with transmissivity `mu^2` and
/// environment occupation `nbar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyStateParams {
    pub kind: StateKind,
    pub alpha: Complex64,
    pub theta_rel: f64,
    pub mu: f64,
    pub nbar: f64,
}

impl NoisyStateParams {
    pub fn new(kind: StateKind, alpha: Complex64, theta_rel: f64, mu: f64, nbar: f64) -> Result<Self> {
        let p = Self { kind, alpha, theta_rel, mu, nbar };
        p.validate()?;
        Ok(p)
    }

    pub fn coherent(alpha: Complex64, mu: f64, nbar: f64) -> Result<Self> {
        Self::new(StateKind::Coherent, alpha, 0.0, mu, nbar)
    }

    pub fn cat(alpha: Complex64, theta_rel: f64, mu: f64, nbar: f64) -> Result<Self> {
        Self::new(StateKind::Cat, alpha, theta_rel, mu, nbar)
    }

    pub fn validate(&self) -> Result<()> {
        let in_box = |v: f64| (-2.0..=2.0).contains(&v);
        if !(in_box(self.alpha.re) && in_box(self.alpha.im)) {
            return Err(Error::Config(format!("alpha {} outside [-2, 2]^2", self.alpha)));
        }
        if !(0.5..=1.0).contains(&self.mu) {
            return Err(Error::Config(format!("mu {} outside [0.5, 1]", self.mu)));
        }
        if !(0.0..=2.0).contains(&self.nbar) {
            return Err(Error::Config(format!("nbar {} outside [0, 2]", self.nbar)));
        }
        if !(0.0..std::f64::consts::TAU).contains(&self.theta_rel) {
            return Err(Error::Config(format!("theta_rel {} outside [0, 2 pi)", self.theta_rel)));
        }
        Ok(())
    }

    /// Effective added noise `nu = (1 - mu^2) nbar`.
    pub fn nu(&self) -> f64 {
        (1.0 - self.mu * self.mu) * self.nbar
    }

    /// Smallest truncation accepted by [`fock_density`].
    pub fn min_cutoff(&self) -> usize {
        (4.0 * (self.alpha.norm_sqr() + self.nbar)).ceil() as usize + 20
    }

    /// Draw parameters uniformly from the admissible box.
    pub fn sample<R: Rng + ?Sized>(kind: StateKind, rng: &mut R) -> Self {
        let alpha = Complex64::new(rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0));
        let theta_rel = match kind {
            StateKind::Coherent => 0.0,
            StateKind::Cat => rng.random_range(0.0..std::f64::consts::TAU),
        };
        Self { kind, alpha, theta_rel, mu: rng.random_range(0.5..=1.0), nbar: rng.random_range(0.0..=2.0) }
    }
}

/// A density matrix in the Fock basis `|0>, ..., |dim - 1>`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    dim: usize,
    data: Vec<Complex64>,
}

impl FockDensity {
    pub fn from_matrix(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::shape(dim * dim, data.len()));
        }
        Ok(Self { dim, data })
    }

    pub fn pure(amplitudes: &[Complex64]) -> Self {
        let dim = amplitudes.len();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for m in 0..dim {
            for n in 0..dim {
                data[m * dim + n] = amplitudes[m] * amplitudes[n].conj();
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[m * self.dim + n]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|n| self.get(n, n).re).sum()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        (0..self.dim).map(|n| n as f64 * self.get(n, n).re).sum()
    }

    /// Population of the top 10% of Fock levels.
    pub fn tail_mass(&self) -> f64 {
        let start = self.dim - (self.dim / 10).max(1);
        (start..self.dim).map(|n| self.get(n, n).re).sum()
    }

    /// Largest `|rho_mn - conj(rho_nm)|`.
    pub fn hermiticity_residue(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.dim {
            for n in m..self.dim {
                worst = worst.max((self.get(m, n) - self.get(n, m).conj()).norm());
            }
        }
        worst
    }

    /// Whether `rho + tol * I` admits a Cholesky factorisation, i.e. every
    /// eigenvalue is at least `-tol`.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let n = self.dim;
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = self.get(j, j).re + tol;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if d <= 0.0 {
                return false;
            }
            let d = d.sqrt();
            l[j * n + j] = Complex64::new(d, 0.0);
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        true
    }

    /// `rho -> e^{-i phi n} rho e^{i phi n}`.
    pub fn rotated(&self, phi: f64) -> Self {
        let mut data = self.data.clone();
        for m in 0..self.dim {
            for n in 0..self.dim {
                data[m * self.dim + n] *= Complex64::from_polar(1.0, -phi * (m as f64 - n as f64));
            }
        }
        Self { dim: self.dim, data }
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// `ln C(n, k)` from a factorial table.
fn ln_binomial(lf: &[f64], n: usize, k: usize) -> f64 {
    lf[n] - lf[k] - lf[n - k]
}

/// Amplitudes of the pure input state, normalised analytically so that
/// truncation loss shows up as a trace deficit.
fn pure_amplitudes(params: &NoisyStateParams, dim: usize) -> Result<Vec<Complex64>> {
    let alpha = params.alpha;
    let mut coherent = Vec::with_capacity(dim);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        coherent.push(c);
    }
    match params.kind {
        StateKind::Coherent => Ok(coherent),
        StateKind::Cat => {
            let overlap = (-2.0 * alpha.norm_sqr()).exp();
            let norm2 = 2.0 + 2.0 * params.theta_rel.cos() * overlap;
            if norm2 < 1e-12 {
                return Err(Error::Domain("cat state with vanishing norm".into()));
            }
            let phase = Complex64::from_polar(1.0, params.theta_rel);
            let scale = 1.0 / norm2.sqrt();
            Ok(coherent
                .iter()
                .enumerate()
                .map(|(n, &c)| {
                    let mirrored = if n % 2 == 0 { c } else { -c };
                    (c + phase * mirrored) * scale
                })
                .collect())
        }
    }
}

/// Pure loss with transmissivity `eta`:
/// `A_k |n> = sqrt(C(n,k) eta^(n-k) (1-eta)^k) |n-k>`.
fn apply_loss(rho: &FockDensity, eta: f64, lf: &[f64]) -> FockDensity {
    let dim = rho.dim;
    if eta >= 1.0 {
        return rho.clone();
    }
    let (ln_eta, ln_rest) = (eta.ln(), (1.0 - eta).ln());
    let coef = |n: usize, k: usize| -> f64 {
        (0.5 * (ln_binomial(lf, n, k) + (n - k) as f64 * ln_eta + k as f64 * ln_rest)).exp()
    };
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for m in 0..dim {
        for n in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim - m.max(n) {
                acc += rho.get(m + k, n + k) * (coef(m + k, k) * coef(n + k, k));
            }
            data[m * dim + n] = acc;
        }
    }
    FockDensity { dim, data }
}

/// Quantum-limited amplifier with gain `g >= 1`:
/// `B_k |n> = sqrt(C(n+k,k) (1-1/g)^k g^-(n+1)) |n+k>`.
fn apply_amplifier(rho: &FockDensity, g: f64, lf: &[f64]) -> FockDensity {
    let dim = rho.dim;
    if g <= 1.0 {
        return rho.clone();
    }
    let (ln_g, ln_rest) = (g.ln(), (1.0 - 1.0 / g).ln());
    let coef = |n: usize, k: usize| -> f64 {
        (0.5 * (ln_binomial(lf, n + k, k) + k as f64 * ln_rest - (n + 1) as f64 * ln_g)).exp()
    };
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for m in 0..dim {
        for n in 0..dim {
            let v = rho.get(m, n);
            for k in 0..dim - m.max(n) {
                data[(m + k) * dim + n + k] += v * (coef(m, k) * coef(n, k));
            }
        }
    }
    FockDensity { dim, data }
}

/// Density matrix of the noisy state in a Fock space of dimension `n_cut`.
///
/// The thermal attenuator `(tau = mu^2, nbar)` is applied as pure loss with
/// transmissivity `tau / g` followed by amplification with gain
/// `g = 1 + (1 - tau) nbar`.
pub fn fock_density(params: &NoisyStateParams, n_cut: usize) -> Result<FockDensity> {
    params.validate()?;
    if n_cut < params.min_cutoff() {
        return Err(Error::Config(format!("n_cut {n_cut} below required {}", params.min_cutoff())));
    }
    let lf = ln_factorials(2 * n_cut + 2);
    let rho = FockDensity::pure(&pure_amplitudes(params, n_cut)?);
    let tau = params.mu * params.mu;
    let g = 1.0 + (1.0 - tau) * params.nbar;
    let rho = apply_amplifier(&apply_loss(&rho, tau / g, &lf), g, &lf);

    let tail = rho.tail_mass();
    let deficit = (rho.trace() - 1.0).abs();
    if tail > TAIL_LIMIT || deficit > TRACE_TOL {
        return Err(Error::Truncation { tail: tail.max(deficit), n_cut });
    }
    Ok(rho)
}

/// Square window and resolution of a Wigner grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerGridConfig {
    pub half_width: f64,
    pub joint_len: usize,
    pub marginal_len: usize,
}

impl Default for WignerGridConfig {
    fn default() -> Self {
        Self { half_width: 7.0, joint_len: 256, marginal_len: MARGINAL_LEN }
    }
}

impl WignerGridConfig {
    pub fn joint_axis(&self) -> Result<UniformGrid> {
        UniformGrid::symmetric(self.half_width, self.joint_len)
    }

    pub fn marginal_axis(&self) -> Result<UniformGrid> {
        UniformGrid::symmetric(self.half_width, self.marginal_len)
    }
}

fn check_hermitian(rho: &FockDensity) -> Result<()> {
    let residue = rho.hermiticity_residue();
    if residue > HERMITIAN_TOL {
        return Err(Error::Hermiticity { residue });
    }
    Ok(())
}

/// Evaluates `W(x, p)` from the Laguerre expansion
/// `W = (1/pi) e^{-B/2} sum_{m,k} rho_{m,m+k} (-1)^m A^k sqrt(m!/(m+k)!) L_m^(k)(B)`
/// (off-diagonal terms doubled, real part taken) with `A = sqrt(2)(x + i p)`
/// and `B = |A|^2`.
#[derive(Debug, Clone)]
pub struct WignerEvaluator<'a> {
    rho: &'a FockDensity,
    inv_sqrt_factorial: Vec<f64>,
}

impl<'a> WignerEvaluator<'a> {
    pub fn new(rho: &'a FockDensity) -> Result<Self> {
        check_hermitian(rho)?;
        let lf = ln_factorials(rho.dim);
        Ok(Self { rho, inv_sqrt_factorial: lf.iter().map(|l| (-0.5 * l).exp()).collect() })
    }

    pub fn eval(&self, x: f64, p: f64) -> f64 {
        let dim = self.rho.dim;
        let a = Complex64::new(x, p) * std::f64::consts::SQRT_2;
        let b = a.norm_sqr();
        let damping = (-0.5 * b).exp();
        let mut total = 0.0;
        let mut a_pow = Complex64::new(1.0, 0.0);
        for k in 0..dim {
            if k > 0 {
                a_pow *= a;
            }
            // f_m = sqrt(m!/(m+k)!) L_m^(k)(B), normalised upward recurrence.
            let kf = k as f64;
            let mut f_prev = 0.0;
            let mut f = self.inv_sqrt_factorial[k] * damping;
            let mut sum = Complex64::new(0.0, 0.0);
            for m in 0..dim - k {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                sum += self.rho.get(m, m + k) * (sign * f);
                let mf = m as f64;
                let next = ((2.0 * mf + 1.0 + kf - b) * f - (mf * (mf + kf)).sqrt() * f_prev)
                    / ((mf + 1.0) * (mf + 1.0 + kf)).sqrt();
                f_prev = f;
                f = next;
            }
            let term = (sum * a_pow).re;
            total += if k == 0 { term } else { 2.0 * term };
        }
        total / std::f64::consts::PI
    }
}

/// `W(x, p)` on the square grid of `cfg`; the first axis is `x`.
pub fn wigner_from_density(rho: &FockDensity, cfg: &WignerGridConfig) -> Result<JointGrid> {
    let axis = cfg.joint_axis()?;
    let eval = WignerEvaluator::new(rho)?;
    Ok(JointGrid::from_fn(axis, axis, |x, p| eval.eval(x, p)))
}

/// Hermite functions `psi_0..psi_{dim-1}` at `x`.
fn hermite_functions(dim: usize, x: f64) -> Vec<f64> {
    let mut psi = vec![0.0; dim];
    psi[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if dim > 1 {
        psi[1] = std::f64::consts::SQRT_2 * x * psi[0];
    }
    for n in 1..dim.saturating_sub(1) {
        let nf = n as f64;
        psi[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
    }
    psi
}

/// Position density `<x|rho|x>` at each point of `grid`.
fn position_density(rho: &FockDensity, grid: &UniformGrid) -> Vec<f64> {
    let dim = rho.dim;
    grid.points()
        .into_iter()
        .map(|x| {
            let psi = hermite_functions(dim, x);
            let mut acc = 0.0;
            for m in 0..dim {
                let mut row = Complex64::new(0.0, 0.0);
                for n in 0..dim {
                    row += rho.get(m, n) * psi[n];
                }
                acc += psi[m] * row.re;
            }
            acc
        })
        .collect()
}

/// Rotated-quadrature density `<x_phi|rho|x_phi>` with
/// `x_phi = x cos(phi) + p sin(phi)`.
pub fn quadrature_density(rho: &FockDensity, phi: f64, grid: &UniformGrid) -> Vec<f64> {
    position_density(&rho.rotated(phi), grid)
}

/// `(W(x), W(p), W(u))` with `u = (x + p) / sqrt(2)`, on the marginal axis of `cfg`.
pub fn wigner_marginals(rho: &FockDensity, cfg: &WignerGridConfig) -> Result<MarginalTriple> {
    check_hermitian(rho)?;
    let grid = cfg.marginal_axis()?;
    let quarter = std::f64::consts::FRAC_PI_4;
    let build = |axis: AxisLabel, phi: f64| -> Result<Marginal> {
        let values = quadrature_density(rho, phi, &grid);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(Error::Negativity { axis: axis.as_str(), min });
        }
        Marginal::new(axis, grid, values)
    };
    Ok(MarginalTriple {
        first: build(AxisLabel::X, 0.0)?,
        second: build(AxisLabel::P, 2.0 * quarter)?,
        oblique: build(AxisLabel::U, quarter)?,
    })
}

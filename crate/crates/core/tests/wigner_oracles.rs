use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use num_complex::Complex64;
use qdgm_core::verification::{l1_marginal, marginals_from_joint, negativity_volume};
use qdgm_core::wigner::*;
use qdgm_core::{Error, UniformGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Phase-space form of `|beta><gamma|` after the attenuator: a Gaussian of
/// variance `1/2 + nu` per quadrature with the complex centre
/// `mu ((beta + conj gamma), i (conj gamma - beta)) / sqrt 2`, weighted by
/// `<gamma|beta>`.
struct Term {
    weight: Complex64,
    centre: [Complex64; 2],
}

fn terms(p: &NoisyStateParams) -> Vec<Term> {
    let a = p.alpha;
    let make = |w: Complex64, beta: Complex64, gamma: Complex64| {
        let overlap = (-0.5 * beta.norm_sqr() - 0.5 * gamma.norm_sqr() + gamma.conj() * beta).exp();
        Term {
            weight: w * overlap,
            centre: [
                p.mu * (beta + gamma.conj()) * FRAC_1_SQRT_2,
                p.mu * c(0.0, 1.0) * (gamma.conj() - beta) * FRAC_1_SQRT_2,
            ],
        }
    };
    match p.kind {
        StateKind::Coherent => vec![make(c(1.0, 0.0), a, a)],
        StateKind::Cat => {
            let n2 = 1.0 / (2.0 + 2.0 * p.theta_rel.cos() * (-2.0 * a.norm_sqr()).exp());
            let e = Complex64::from_polar(1.0, p.theta_rel);
            vec![
                make(c(n2, 0.0), a, a),
                make(c(n2, 0.0), -a, -a),
                make(n2 * e.conj(), a, -a),
                make(n2 * e, -a, a),
            ]
        }
    }
}

fn oracle_w(p: &NoisyStateParams, x: f64, q: f64) -> f64 {
    let s = 1.0 + 2.0 * p.nu();
    terms(p)
        .iter()
        .map(|t| t.weight * ((-(x - t.centre[0]).powi(2) - (q - t.centre[1]).powi(2)) / s).exp() / (PI * s))
        .sum::<Complex64>()
        .re
}

/// Density of the quadrature along unit direction `e`.
fn oracle_marginal(p: &NoisyStateParams, e: [f64; 2], s: f64) -> f64 {
    let var = 0.5 + p.nu();
    terms(p)
        .iter()
        .map(|t| {
            let m = e[0] * t.centre[0] + e[1] * t.centre[1];
            t.weight * (-(s - m).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
        })
        .sum::<Complex64>()
        .re
}

fn draws(n: usize, seed: u64) -> Vec<NoisyStateParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| NoisyStateParams::sample(if i % 2 == 0 { StateKind::Coherent } else { StateKind::Cat }, &mut rng))
        .collect()
}

#[test]
fn noisy_states_match_coherent_state_expansion() {
    let mut cases = draws(6, 11);
    cases.push(NoisyStateParams::cat(c(2.0, 0.0), 0.0, 1.0, 0.0).unwrap());
    cases.push(NoisyStateParams::cat(c(2.0, 0.0), 0.0, 0.6, 2.0).unwrap());
    let pts = UniformGrid::symmetric(6.0, 49).unwrap().points();
    for p in &cases {
        let rho = fock_density(p, DEFAULT_N_CUT).unwrap();
        let eval = WignerEvaluator::new(&rho).unwrap();
        let mut sup = 0.0f64;
        for &x in &pts {
            for &q in &pts {
                sup = sup.max((eval.eval(x, q) - oracle_w(p, x, q)).abs());
            }
        }
        assert!(sup <= 1e-8, "{p:?}: joint sup error {sup}");
        let cfg = WignerGridConfig::default();
        let triple = wigner_marginals(&rho, &cfg).unwrap();
        let dirs = [[1.0, 0.0], [0.0, 1.0], [FRAC_1_SQRT_2, FRAC_1_SQRT_2]];
        for (m, e) in triple.iter().zip(dirs) {
            let sup = m.grid.points().iter().zip(&m.values).map(|(&s, v)| (v - oracle_marginal(p, e, s)).abs()).fold(0.0, f64::max);
            assert!(sup <= 1e-8, "{p:?} {}: sup error {sup}", m.axis);
        }
    }
}

#[test]
fn vacuum_values() {
    let p = NoisyStateParams::coherent(c(0.0, 0.0), 1.0, 0.0).unwrap();
    let rho = fock_density(&p, DEFAULT_N_CUT).unwrap();
    assert!((rho.get(0, 0).re - 1.0).abs() < 1e-14);
    let eval = WignerEvaluator::new(&rho).unwrap();
    assert!((eval.eval(0.0, 0.0) - 1.0 / PI).abs() < 1e-12);
    let triple = wigner_marginals(&rho, &WignerGridConfig::default()).unwrap();
    for m in triple.iter() {
        for (q, v) in m.grid.points().iter().zip(&m.values) {
            assert!((v - (-q * q).exp() / PI.sqrt()).abs() < 1e-12);
        }
    }
}

#[test]
fn channel_moments() {
    let p = NoisyStateParams::coherent(c(1.0, 0.0), 0.8, 1.0).unwrap();
    let rho = fock_density(&p, DEFAULT_N_CUT).unwrap();
    let want = 0.64 + p.nu();
    assert!((rho.mean_photon_number() - want).abs() < 1e-10);
    assert!(rho.purity() < 1.0 - 1e-3);
    assert!(rho.is_positive_semidefinite(1e-10));
    let m = wigner_marginals(&rho, &WignerGridConfig::default()).unwrap().first;
    let (mean, sd) = m.moments();
    assert!((mean - SQRT_2 * 0.8).abs() < 1e-6);
    assert!((sd * sd - (0.5 + p.nu())).abs() < 1e-6);
}

#[test]
fn identity_channel_keeps_purity() {
    for p in draws(4, 5) {
        let p = NoisyStateParams { mu: 1.0, nbar: 0.0, ..p };
        let rho = fock_density(&p, DEFAULT_N_CUT).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-8);
    }
}

fn cat_grid(mu: f64, nbar: f64) -> qdgm_core::JointGrid {
    let cfg = WignerGridConfig { joint_len: 97, ..WignerGridConfig::default() };
    let p = NoisyStateParams::cat(c(2.0, 0.0), 0.0, mu, nbar).unwrap();
    wigner_from_density(&fock_density(&p, DEFAULT_N_CUT).unwrap(), &cfg).unwrap()
}

#[test]
fn thermal_noise_fills_the_fringes() {
    let mut last_min = f64::NEG_INFINITY;
    let mut last_vol = f64::INFINITY;
    for nbar in [0.0, 1.0, 2.0] {
        let w = cat_grid(0.95, nbar);
        assert!(w.min() >= -1.0 / PI - 1e-6);
        let vol = negativity_volume(&w);
        assert!(w.min() > last_min && vol < last_vol && vol > 0.0, "nbar={nbar}");
        last_min = w.min();
        last_vol = vol;
    }
    assert!(cat_grid(1.0, 0.0).min() < -0.2);
}

/// Once the added noise `(1 - mu^2)(nbar + 1/2)` exceeds `mu^2 / 2` the
/// output is a smoothed Husimi function and cannot go negative.
#[test]
fn strong_noise_removes_negativity() {
    assert!(negativity_volume(&cat_grid(0.8, 0.0)) > 1e-3);
    for nbar in [1.0, 2.0] {
        let w = cat_grid(0.8, nbar);
        assert!(w.min() > -1e-12, "nbar={nbar}: min {}", w.min());
    }
}

#[test]
fn joint_and_marginals_agree() {
    let cfg = WignerGridConfig::default();
    for p in draws(4, 23) {
        let rho = fock_density(&p, DEFAULT_N_CUT).unwrap();
        let joint = wigner_from_density(&rho, &cfg).unwrap();
        assert!((joint.integral() - 1.0).abs() <= 1e-3);
        let direct = wigner_marginals(&rho, &cfg).unwrap();
        let from_joint = marginals_from_joint(&joint, &direct).unwrap();
        for (a, b) in direct.iter().zip(from_joint.iter()) {
            let l1 = l1_marginal(a, b).unwrap();
            assert!(l1 <= 1e-3, "{p:?} {}: L1 {l1}", a.axis);
        }
    }
}

#[test]
fn cutoff_below_requirement_is_refused() {
    let p = NoisyStateParams::cat(c(2.0, 2.0), 1.0, 0.9, 2.0).unwrap();
    assert!(matches!(fock_density(&p, 30), Err(Error::Config(_))));
    assert!(NoisyStateParams::coherent(c(2.5, 0.0), 1.0, 0.0).is_err());
}

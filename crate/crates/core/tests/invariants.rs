use num_complex::Complex64;
use proptest::prelude::*;
use qdgm_core::cher::{characteristic_from_marginal, marginal_from_characteristic};
use qdgm_core::colormap::{encode_height, ColorMapConfig, Decoder};
use qdgm_core::synth::*;
use qdgm_core::verification::l1_marginal;
use qdgm_core::wigner::{fock_density, NoisyStateParams, StateKind};
use qdgm_core::{AxisLabel, Marginal, UniformGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn preset() -> SynthConfig {
    SynthConfig {
        mean_x1: Range::new(-1.0, 0.5).unwrap(),
        mean_x13: Range::new(-1.0, 0.5).unwrap(),
        sigma: Range::new(0.8, 2.5).unwrap(),
        rho: Range::new(-0.8, 0.9).unwrap(),
        lobe_distance: Range::new(0.3, 1.5).unwrap(),
        lobe_ratio: Range::new(0.35, 1.0).unwrap(),
        amplitude: Range::new(0.05, 0.6).unwrap(),
    }
}

fn in_range(g: &GaussianComponent) -> bool {
    g.sigma.iter().all(|&s| s > 0.0) && g.rho.abs() < 1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samples_respect_ranges(seed in any::<u64>()) {
        let cfg = preset();
        let s = sample_params(seed, &cfg).unwrap();
        prop_assert_eq!(s, sample_params(seed, &cfg).unwrap());
        prop_assert!(cfg.amplitude.contains(s.amplitude));
        prop_assert!(cfg.mean_x1.contains(s.p.mean[0]) && cfg.mean_x13.contains(s.p.mean[1]));
        prop_assert!(cfg.sigma.contains(s.p.sigma[0]) && cfg.sigma.contains(s.p.sigma[1]));
        prop_assert!(cfg.rho.contains(s.p.rho));
        prop_assert!(in_range(&s.p_prime) && in_range(&s.p_dprime));
        let plain = sample_params(seed, &cfg.plain()).unwrap();
        prop_assert_eq!(plain.amplitude, 0.0);
    }

    #[test]
    fn signed_marginals_keep_unit_mass(seed in any::<u64>()) {
        let s = sample_params(seed, &preset()).unwrap();
        let grid = UniformGrid::symmetric(40.0, 2001).unwrap();
        for e in [X1_AXIS, X13_AXIS, U_AXIS] {
            let values: Vec<f64> = grid.points().into_iter().map(|x| s.marginal_at(e, x)).collect();
            prop_assert!((grid.trapezoid(&values) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn colour_round_trip(u in 0.0f64..=1.0, wigner in any::<bool>()) {
        let cfg = if wigner { ColorMapConfig::wigner() } else { ColorMapConfig::cher() };
        let z = cfg.height(u);
        let back = Decoder::new(cfg).decode_rgb(encode_height(z, &cfg)).z;
        prop_assert!((back - z).abs() <= 0.005 * cfg.z_scale);
    }

    #[test]
    fn l1_triangle(a in prop::collection::vec(-1.0f64..1.0, 721),
                   b in prop::collection::vec(-1.0f64..1.0, 721),
                   c in prop::collection::vec(-1.0f64..1.0, 721)) {
        let grid = UniformGrid::symmetric(3.0, 721).unwrap();
        let m = |v: Vec<f64>| Marginal::new(AxisLabel::U, grid, v).unwrap();
        let (a, b, c) = (m(a), m(b), m(c));
        let ac = l1_marginal(&a, &c).unwrap();
        prop_assert!(ac <= l1_marginal(&a, &b).unwrap() + l1_marginal(&b, &c).unwrap() + 1e-15);
        prop_assert_eq!(l1_marginal(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_inversion_round_trip(mu in -1.0f64..1.0, sigma in 0.4f64..1.5, scale_oblique in any::<bool>()) {
        let s = if scale_oblique { std::f64::consts::SQRT_2 } else { 1.0 };
        let times = UniformGrid::new(0.0, 10.0 / (sigma * s), 2048).unwrap();
        let phi: Vec<Complex64> = times.points().into_iter()
            .map(|t| Complex64::from_polar((-0.5 * (sigma * s * t).powi(2)).exp(), -mu * s * t))
            .collect();
        let out = UniformGrid::symmetric(8.0, 721).unwrap();
        let m = marginal_from_characteristic(&phi, &times, s, &out, AxisLabel::U).unwrap();
        for &t in &[0.2, 0.7, 1.5] {
            let want = Complex64::from_polar((-0.5 * (sigma * s * t).powi(2)).exp(), -mu * s * t);
            prop_assert!((characteristic_from_marginal(&m, s, t) - want).norm() <= 1e-6);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn density_matrices_are_physical(seed in any::<u64>(), cat in any::<bool>()) {
        let kind = if cat { StateKind::Cat } else { StateKind::Coherent };
        let p = NoisyStateParams::sample(kind, &mut ChaCha8Rng::seed_from_u64(seed));
        let rho = fock_density(&p, 60).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() <= 1e-8);
        prop_assert!(rho.hermiticity_residue() <= 1e-12);
        prop_assert!(rho.purity() <= 1.0 + 1e-10);
        prop_assert!(rho.tail_mass() <= 1e-6);
        prop_assert!(rho.is_positive_semidefinite(1e-10));
    }
}

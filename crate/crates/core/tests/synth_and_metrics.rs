use qdgm_core::cher::{CherConfig, SpectralDensity};
use qdgm_core::colormap::{encode_grid, ColorMapConfig, Decoder};
use qdgm_core::synth::*;
use qdgm_core::verification::*;
use qdgm_core::{AxisLabel, Marginal, UniformGrid};

fn preset() -> SynthConfig {
    SynthConfig {
        mean_x1: Range::new(-0.8, 0.2).unwrap(),
        mean_x13: Range::new(-0.8, 0.2).unwrap(),
        sigma: Range::new(1.0, 2.5).unwrap(),
        rho: Range::new(-0.5, 0.9).unwrap(),
        lobe_distance: Range::new(0.3, 1.5).unwrap(),
        lobe_ratio: Range::new(0.4, 1.0).unwrap(),
        amplitude: Range::new(0.05, 0.6).unwrap(),
    }
}

fn grids() -> SynthGrids {
    let sd = SpectralDensity::super_ohmic(0.1, 2.0, 1.0).unwrap();
    SynthGrids::new(10.0, 256, &CherConfig::for_density(&sd)).unwrap()
}

#[test]
fn analytic_marginals_match_grid_integration() {
    let g = grids();
    for seed in 0..10 {
        let s = sample_params(seed, &preset()).unwrap();
        let joint = eval_joint(&s, &g.joint);
        assert!((joint.integral() - 1.0).abs() <= 1e-3);
        let exact = analytic_marginals(&s, &g).unwrap();
        let numeric = marginals_from_joint(&joint, &exact).unwrap();
        for (a, b) in exact.iter().zip(numeric.iter()) {
            assert!((a.integral() - 1.0).abs() <= 1e-3);
            let l1 = l1_marginal(a, b).unwrap();
            assert!(l1 <= 1e-3, "seed {seed} {}: {l1}", a.axis);
        }
    }
}

#[test]
fn negativity_appears_only_with_signed_lobes() {
    let g = grids();
    let dense = UniformGrid::symmetric(10.0, 1024).unwrap();
    for seed in 0..10 {
        let s = sample_params(seed, &preset()).unwrap();
        let plain = SyntheticSample::plain(s.p);
        assert!(eval_joint(&plain, &g.joint).min() >= 0.0);
        let coarse_min = eval_joint(&s, &g.joint).min();
        let dense_min = eval_joint(&s, &dense).min();
        assert_eq!(coarse_min < -1e-6, dense_min < -1e-6, "seed {seed}");
    }
}

#[test]
fn isolated_well_volume() {
    let p = GaussianComponent::new([-4.0, 0.0], [0.6, 0.6], 0.0).unwrap();
    let well = GaussianComponent::new([4.0, 0.0], [0.5, 0.7], 0.3).unwrap();
    let s = SyntheticSample { p, p_prime: p, p_dprime: well, amplitude: 0.2 };
    let axis = UniformGrid::symmetric(10.0, 512).unwrap();
    let vol = negativity_volume(&eval_joint(&s, &axis));
    assert!((vol - 0.2).abs() < 1e-4, "{vol}");
}

#[test]
fn cancelling_lobes_reduce_to_the_core() {
    let s = sample_params(3, &preset()).unwrap();
    let same = SyntheticSample { p_dprime: s.p_prime, ..s };
    let axis = UniformGrid::symmetric(6.0, 32).unwrap();
    let a = eval_joint(&same, &axis);
    let b = eval_joint(&SyntheticSample::plain(s.p), &axis);
    assert_eq!(a.values, b.values);
    let std = SyntheticSample::plain(GaussianComponent::standard());
    assert!((std.density(0.0, 0.0) - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
}

#[test]
fn verification_of_exact_encodings_stays_within_codec_budget() {
    let g = grids();
    let zeta0 = 1.0 / 5.5;
    for seed in 0..3 {
        let s = sample_params(100 + seed, &preset()).unwrap();
        let joint = eval_joint(&s, &g.joint);
        let span = (joint.max() / (1.0 - zeta0)).max(-joint.min() / zeta0) * 1.01;
        let cfg = ColorMapConfig::anchored(zeta0, span).unwrap();
        let dec = Decoder::new(cfg);
        let gt = analytic_marginals(&s, &g).unwrap();
        let (img, stats) = encode_grid(&joint, &cfg).unwrap();
        assert_eq!(stats.saturated, 0);
        let (report, _, _) = verify_with_label(&img, &img, &gt, &dec, &g.joint).unwrap();
        assert_eq!(report.l2_image, Some(0.0));
        for (l1, peak) in report.l1_per_marginal.iter().zip(report.peak_per_marginal) {
            assert!(*l1 <= 2e-3 * peak, "seed {seed}: {l1} vs peak {peak}");
        }
        assert!(!report.axes_swapped);
    }
}

#[test]
fn shifted_gaussian_l1_is_total_variation() {
    let grid = UniformGrid::symmetric(4.0, 721).unwrap();
    let f = |x: f64| (-x * x / 2.0).exp();
    let a = Marginal::new(AxisLabel::X1, grid, grid.points().into_iter().map(f).collect()).unwrap();
    let b = Marginal::new(AxisLabel::X1, grid, grid.points().into_iter().map(|x| f(x - grid.step())).collect()).unwrap();
    let tv: f64 = (1..grid.len).map(|i| (a.values[i] - a.values[i - 1]).abs()).sum::<f64>() + (a.values[0] - f(grid.min - grid.step())).abs();
    let l1 = l1_marginal(&a, &b).unwrap();
    assert!((l1 - tv / 721.0).abs() < 1e-12, "{l1} vs {}", tv / 721.0);
}

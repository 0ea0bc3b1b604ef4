use qdgm_core::colormap::*;
use qdgm_core::{JointGrid, UniformGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn presets() -> [ColorMapConfig; 2] {
    [ColorMapConfig::wigner(), ColorMapConfig::cher()]
}

#[test]
fn reference_values() {
    for cfg in presets() {
        let z0 = cfg.height(cfg.zeta0);
        assert!((encode_height(z0, &cfg)[1] - 1.0).abs() < 1e-15);
        let g = encode_height(cfg.height(cfg.zeta0 + 0.14), &cfg)[1];
        assert!((g - (2.0 * (-0.5f64).exp() - 1.0)).abs() < 1e-12, "{g}");
        let far = channels(50.0, cfg.zeta0);
        assert!((far[0] + 1.0).abs() < 1e-12);
        let dec = Decoder::new(cfg);
        let d = dec.decode_rgb([encode_height(0.0, &cfg)[0], 1.0, encode_height(z0, &cfg)[2]]);
        assert!((d.z - z0).abs() < 1e-3 * cfg.z_scale);
    }
}

#[test]
fn round_trip_over_the_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for cfg in presets() {
        let dec = Decoder::new(cfg);
        let (lo, hi) = cfg.z_range();
        let worst = (0..20_000)
            .map(|_| {
                let z = rng.random_range(lo..=hi);
                (dec.decode_rgb(encode_height(z, &cfg)).z - z).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 0.005 * cfg.z_scale, "{cfg:?}: {worst}");
    }
}

#[test]
fn noisy_colours_decode_nearby() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for cfg in presets() {
        let dec = Decoder::new(cfg);
        let (lo, hi) = cfg.z_range();
        let base = encode_height(0.0, &cfg);
        for _ in 0..2000 {
            let rgb = base.map(|c| c + rng.random_range(-0.01..=0.01));
            let d = dec.decode_rgb(rgb);
            assert!(d.z.abs() <= 0.01 * (hi - lo), "{cfg:?}: {}", d.z);
            assert!(!d.out_of_gamut());
        }
    }
}

#[test]
fn curve_is_injective() {
    for cfg in presets() {
        assert!(injectivity_margin(&cfg, 4096, 0.01) > 0.0);
    }
}

#[test]
fn grids_round_trip_and_channels_localise() {
    let cfg = ColorMapConfig::wigner();
    let axis = UniformGrid::symmetric(5.0, 64).unwrap();
    let vacuum = JointGrid::from_fn(axis, axis, |x, p| (-x * x - p * p).exp() / std::f64::consts::PI);
    let (img, stats) = encode_grid(&vacuum, &cfg).unwrap();
    assert_eq!(stats, EncodeStats::default());
    // Zero height is white; positive heights pull B down, negative ones pull R down.
    let b = img.channel(2);
    let argmin = (0..b.len()).min_by(|&x, &y| b[x].total_cmp(&b[y])).unwrap();
    let (i, j) = (argmin / 64, argmin % 64);
    assert!(axis.point(i).abs() < axis.step() && axis.point(j).abs() < axis.step());
    assert!(img.channel(0).iter().all(|&r| r > 0.4));

    let well = JointGrid::from_fn(axis, axis, |x, p| -0.3 * (-(x - 2.0).powi(2) - p * p).exp());
    let (img, _) = encode_grid(&well, &cfg).unwrap();
    let (r, b) = (img.channel(0), img.channel(2));
    let dark: Vec<usize> = (0..r.len()).filter(|&k| r[k] < 0.5).collect();
    assert!(!dark.is_empty());
    assert!(dark.iter().all(|&k| (axis.point(k / 64) - 2.0).abs() < 2.0 && axis.point(k % 64).abs() < 2.0));
    assert!(dark.iter().all(|&k| b[k] > r[k]));

    let dec = Decoder::new(cfg);
    let back = dec.decode_image(&encode_grid(&vacuum, &cfg).unwrap().0, axis, axis).unwrap();
    assert_eq!(back.out_of_gamut, 0);
    let sup = back.joint.values.iter().zip(&vacuum.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(sup <= 0.005 * cfg.z_scale);
}

#[test]
fn zero_images_decode_to_zero() {
    let cfg = ColorMapConfig::cher();
    let axis = UniformGrid::symmetric(3.0, 16).unwrap();
    let (img, _) = encode_grid(&JointGrid::zeros(axis, axis), &cfg).unwrap();
    let back = Decoder::new(cfg).decode_image(&img, axis, axis).unwrap();
    assert!(back.joint.values.iter().all(|v| v.abs() < 1e-6 * cfg.z_scale));
}

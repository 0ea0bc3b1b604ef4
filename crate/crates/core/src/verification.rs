//! Image and marginal metrics, marginals of decoded joints, and the
//! marginal-consistency check used when no ground-truth joint exists.

use serde::{Deserialize, Serialize};

use crate::colormap::{Decoder, EncodedImage};
use crate::error::{Error, Result};
use crate::grid::{JointGrid, Marginal, MarginalTriple, UniformGrid};
use crate::interp::resample_cubic;

/// Decodes with more than this fraction of out-of-gamut pixels are rejected.
pub const UNRELIABLE_FRACTION: f64 = 0.2;

/// `sqrt(sum |gt - pred|^2) / N` over all `N` channel values.
pub fn l2_image(gt: &EncodedImage, pred: &EncodedImage) -> Result<f64> {
    if gt.size != pred.size || gt.data.len() != pred.data.len() {
        return Err(Error::shape(format!("3x{0}x{0}", gt.size), format!("3x{0}x{0}", pred.size)));
    }
    let sum: f64 = gt.data.iter().zip(&pred.data).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum.sqrt() / gt.data.len() as f64)
}

/// `sum |gt - pred| / n` over the `n` marginal samples.
pub fn l1_marginal(gt: &Marginal, pred: &Marginal) -> Result<f64> {
    if !gt.grid.same_as(&pred.grid) {
        return Err(Error::shape(format!("{:?}", gt.grid), format!("{:?}", pred.grid)));
    }
    let sum: f64 = gt.values.iter().zip(&pred.values).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / gt.values.len() as f64)
}

/// `-int min(W, 0)` with the trapezoidal cell measure of the grid.
pub fn negativity_volume(joint: &JointGrid) -> f64 {
    let negative = JointGrid {
        first: joint.first,
        second: joint.second,
        values: joint.values.iter().map(|&v| (-v).max(0.0)).collect(),
    };
    negative.integral()
}

/// Integrate `joint` along `v` for each `u` of `out`, where
/// `first = (u - v)/sqrt(2)` and `second = (u + v)/sqrt(2)`; the joint is
/// resampled bilinearly on the rotated frame with the joint's own step.
pub fn oblique_marginal(joint: &JointGrid, out: &UniformGrid) -> Vec<f64> {
    let h = joint.first.step().min(joint.second.step());
    let reach = [joint.first.min, joint.first.max, joint.second.min, joint.second.max]
        .iter()
        .fold(0.0f64, |a, b| a.max(b.abs()))
        * std::f64::consts::SQRT_2;
    let n_half = (reach / h).ceil() as i64;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    out.points()
        .into_iter()
        .map(|u| {
            // The sample vanishes at both ends of the v range, so the
            // trapezoid rule reduces to a plain sum.
            (-n_half..=n_half)
                .map(|k| {
                    let v = k as f64 * h;
                    joint.bilinear(r * (u - v), r * (u + v))
                })
                .sum::<f64>()
                * h
        })
        .collect()
}

/// The three marginals of a joint grid, resampled onto the grids (and
/// labels) of `like`.
pub fn marginals_from_joint(joint: &JointGrid, like: &MarginalTriple) -> Result<MarginalTriple> {
    let first = resample_cubic(&joint.first, &joint.integrate_second(), &like.first.grid);
    let second = resample_cubic(&joint.second, &joint.integrate_first(), &like.second.grid);
    let oblique = oblique_marginal(joint, &like.oblique.grid);
    Ok(MarginalTriple {
        first: Marginal::new(like.first.axis, like.first.grid, first)?,
        second: Marginal::new(like.second.axis, like.second.grid, second)?,
        oblique: Marginal::new(like.oblique.axis, like.oblique.grid, oblique)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Present only when a ground-truth image exists.
    pub l2_image: Option<f64>,
    pub l1_per_marginal: [f64; 3],
    pub peak_per_marginal: [f64; 3],
    pub negativity_volume: f64,
    pub out_of_gamut_fraction: f64,
    /// The first two predicted marginals match the ground truth better
    /// when exchanged.
    pub axes_swapped: bool,
}

impl MetricReport {
    /// Each L1 divided by the peak of its ground-truth marginal.
    pub fn relative_l1(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.l1_per_marginal[k] / self.peak_per_marginal[k])
    }

    pub fn mean_relative_l1(&self) -> f64 {
        self.relative_l1().iter().sum::<f64>() / 3.0
    }
}

/// Decode a predicted image, derive its marginals and compare them with the
/// ground-truth marginals.
pub fn gt_deficient_verify(
    pred_img: &EncodedImage,
    gt: &MarginalTriple,
    decoder: &Decoder,
    joint_axis: &UniformGrid,
) -> Result<(MetricReport, MarginalTriple, JointGrid)> {
    let decoded = decoder.decode_image(pred_img, *joint_axis, *joint_axis)?;
    let fraction = decoded.out_of_gamut_fraction();
    if fraction > UNRELIABLE_FRACTION {
        return Err(Error::Unreliable { fraction });
    }
    let pred = marginals_from_joint(&decoded.joint, gt)?;
    let direct = [
        l1_marginal(&gt.first, &pred.first)?,
        l1_marginal(&gt.second, &pred.second)?,
        l1_marginal(&gt.oblique, &pred.oblique)?,
    ];
    let axes_swapped = if gt.first.grid.same_as(&gt.second.grid) {
        let crossed = l1_marginal(&gt.first, &pred.second)? + l1_marginal(&gt.second, &pred.first)?;
        crossed < 0.5 * (direct[0] + direct[1])
    } else {
        false
    };
    let report = MetricReport {
        l2_image: None,
        l1_per_marginal: direct,
        peak_per_marginal: [gt.first.peak(), gt.second.peak(), gt.oblique.peak()],
        negativity_volume: negativity_volume(&decoded.joint),
        out_of_gamut_fraction: fraction,
        axes_swapped,
    };
    Ok((report, pred, decoded.joint))
}

/// As [`gt_deficient_verify`], adding the image metric against a known label.
pub fn verify_with_label(
    pred_img: &EncodedImage,
    gt_img: &EncodedImage,
    gt: &MarginalTriple,
    decoder: &Decoder,
    joint_axis: &UniformGrid,
) -> Result<(MetricReport, MarginalTriple, JointGrid)> {
    let l2 = l2_image(gt_img, pred_img)?;
    let (mut report, pred, joint) = gt_deficient_verify(pred_img, gt, decoder, joint_axis)?;
    report.l2_image = Some(l2);
    Ok((report, pred, joint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisLabel;

    #[test]
    fn l2_of_identical_images_is_zero() {
        let a = EncodedImage::filled(8, [0.1, -0.2, 0.3]);
        assert_eq!(l2_image(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn l2_uniform_offset() {
        let a = EncodedImage::filled(256, [-0.5, 0.0, -0.25]);
        let b = EncodedImage::new(256, a.data.iter().map(|v| v + 1.0).collect()).unwrap();
        let want = (196_608f64).sqrt() / 196_608.0;
        assert!((l2_image(&a, &b).unwrap() - want).abs() < 1e-12);
        assert!((want - 2.2552e-3).abs() < 1e-7);
    }

    #[test]
    fn l2_rejects_shape_mismatch() {
        let a = EncodedImage::filled(8, [0.0; 3]);
        let b = EncodedImage::filled(4, [0.0; 3]);
        assert!(matches!(l2_image(&a, &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn l1_requires_matching_grids() {
        let g = UniformGrid::symmetric(3.0, 721).unwrap();
        let h = UniformGrid::symmetric(4.0, 721).unwrap();
        let a = Marginal::new(AxisLabel::X1, g, vec![0.0; 721]).unwrap();
        let b = Marginal::new(AxisLabel::X1, h, vec![0.0; 721]).unwrap();
        assert_eq!(l1_marginal(&a, &a).unwrap(), 0.0);
        assert!(l1_marginal(&a, &b).is_err());
    }

    #[test]
    fn nonnegative_grid_has_no_negativity() {
        let g = UniformGrid::symmetric(2.0, 33).unwrap();
        let joint = JointGrid::from_fn(g, g, |x, y| (-(x * x + y * y)).exp());
        assert_eq!(negativity_volume(&joint), 0.0);
    }

    #[test]
    fn oblique_marginal_of_isotropic_gaussian() {
        let g = UniformGrid::symmetric(6.0, 241).unwrap();
        let joint = JointGrid::from_fn(g, g, |x, y| (-(x * x + y * y) / 2.0).exp() / (2.0 * std::f64::consts::PI));
        let out = UniformGrid::symmetric(3.0, 61).unwrap();
        for (u, v) in out.points().iter().zip(oblique_marginal(&joint, &out)) {
            let want = (-u * u / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert!((v - want).abs() < 2e-3, "u={u}: {v} vs {want}");
        }
    }
}

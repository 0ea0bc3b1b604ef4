//! PNG figures drawn directly on pixel buffers.

use std::path::Path;

use anyhow::{Context, Result};
use image::{Rgb, RgbImage};
use qdgm_core::colormap::EncodedImage;
use qdgm_core::{JointGrid, MarginalTriple};

const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([120, 120, 120]);
pub const BLACK: [u8; 3] = [0, 0, 0];
pub const RED: [u8; 3] = [200, 30, 30];
pub const BLUE: [u8; 3] = [30, 60, 200];

fn to_byte(v: f64) -> u8 {
    ((v.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8
}

/// Channel values in [-1, 1] shown as RGB, first axis down the rows.
pub fn encoded(img: &EncodedImage) -> RgbImage {
    let s = img.size as u32;
    RgbImage::from_fn(s, s, |x, y| Rgb(img.rgb(y as usize, x as usize).map(to_byte)))
}

/// Nearest-neighbour enlargement.
pub fn magnify(img: &RgbImage, factor: u32) -> RgbImage {
    RgbImage::from_fn(img.width() * factor, img.height() * factor, |x, y| *img.get_pixel(x / factor, y / factor))
}

/// The bounding box of the negative heights, enlarged and shaded by depth
/// (white at zero, saturated blue at the deepest pixel). `None` when the
/// joint has no negative values.
pub fn negative_region(joint: &JointGrid, target: u32) -> Option<RgbImage> {
    let (n1, n2) = (joint.first.len, joint.second.len);
    let deepest = joint.min();
    if deepest >= 0.0 {
        return None;
    }
    let (mut i0, mut i1, mut j0, mut j1) = (n1, 0, n2, 0);
    for i in 0..n1 {
        for j in 0..n2 {
            if joint.get(i, j) < 0.0 {
                (i0, i1, j0, j1) = (i0.min(i), i1.max(i), j0.min(j), j1.max(j));
            }
        }
    }
    let (h, w) = ((i1 - i0 + 1) as u32, (j1 - j0 + 1) as u32);
    let factor = (target / h.max(w)).max(1);
    let crop = RgbImage::from_fn(w, h, |x, y| {
        let v = joint.get(i0 + y as usize, j0 + x as usize);
        let t = if v < 0.0 { v / deepest } else { 0.0 };
        let fade = (255.0 * (1.0 - t)).round() as u8;
        Rgb([fade, fade, 255])
    });
    Some(magnify(&crop, factor))
}

/// Pixel-wise `|a - b|` averaged over channels, 0 as black and 2 as white.
pub fn abs_difference(a: &EncodedImage, b: &EncodedImage) -> RgbImage {
    let s = a.size as u32;
    RgbImage::from_fn(s, s, |x, y| {
        let (p, q) = (a.rgb(y as usize, x as usize), b.rgb(y as usize, x as usize));
        let d = (0..3).map(|c| (p[c] - q[c]).abs()).sum::<f64>() / 3.0;
        let v = (d / 2.0 * 255.0).round().clamp(0.0, 255.0) as u8;
        Rgb([v, v, v])
    })
}

/// One curve of a line plot.
pub struct Series<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub color: [u8; 3],
}

fn draw_line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Curves on shared axes with a zero line; `log_y` plots `log10(y)` and
/// skips non-positive values.
pub fn line_plot(series: &[Series], width: u32, height: u32, log_y: bool) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, WHITE);
    let pad = 10.0;
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let points = || series.iter().flat_map(|s| s.x.iter().zip(s.y).filter(|(_, &y)| !log_y || y > 0.0));
    let (mut xlo, mut xhi, mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (&x, &y) in points() {
        let y = ty(y);
        if x.is_finite() && y.is_finite() {
            (xlo, xhi, ylo, yhi) = (xlo.min(x), xhi.max(x), ylo.min(y), yhi.max(y));
        }
    }
    if !(xlo < xhi) {
        return img;
    }
    if !log_y {
        (ylo, yhi) = (ylo.min(0.0), yhi.max(0.0));
    }
    if !(ylo < yhi) {
        (ylo, yhi) = (ylo - 1.0, yhi + 1.0);
    }
    let px = |x: f64| (pad + (x - xlo) / (xhi - xlo) * (width as f64 - 2.0 * pad)).round() as i64;
    let py = |y: f64| (height as f64 - pad - (y - ylo) / (yhi - ylo) * (height as f64 - 2.0 * pad)).round() as i64;
    let (left, right) = (px(xlo), px(xhi));
    let bottom = py(ylo);
    draw_line(&mut img, (left, bottom), (right, bottom), AXIS);
    draw_line(&mut img, (left, py(ylo)), (left, py(yhi)), AXIS);
    if !log_y {
        draw_line(&mut img, (left, py(0.0)), (right, py(0.0)), AXIS);
    }
    for s in series {
        let color = Rgb(s.color);
        let mut prev = None;
        for (&x, &y) in s.x.iter().zip(s.y) {
            if log_y && y <= 0.0 {
                prev = None;
                continue;
            }
            let p = (px(x), py(ty(y)));
            if let Some(q) = prev {
                draw_line(&mut img, q, p, color);
            }
            prev = Some(p);
        }
    }
    img
}

/// Three panels side by side: ground truth in black, prediction in red.
pub fn marginal_overlay(gt: &MarginalTriple, pred: &MarginalTriple) -> RgbImage {
    let (w, h) = (320, 240);
    let mut out = RgbImage::from_pixel(3 * w, h, WHITE);
    for (k, (g, p)) in gt.iter().zip(pred.iter()).enumerate() {
        let x = g.grid.points();
        let panel = line_plot(
            &[Series { x: &x, y: &g.values, color: BLACK }, Series { x: &x, y: &p.values, color: RED }],
            w,
            h,
            false,
        );
        image::imageops::replace(&mut out, &panel, (k as u32 * w) as i64, 0);
    }
    out
}

pub fn save(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qdgm_core::UniformGrid;

    #[test]
    fn encoded_extremes_map_to_byte_extremes() {
        let img = EncodedImage::filled(2, [1.0, -1.0, 0.0]);
        assert_eq!(encoded(&img).get_pixel(1, 1).0, [255, 0, 128]);
    }

    #[test]
    fn negative_region_crops_the_negative_pixels() {
        let g = UniformGrid::symmetric(1.0, 21).unwrap();
        let joint = JointGrid::from_fn(g, g, |x, y| if x.abs() < 0.15 && y.abs() < 0.25 { -1.0 } else { 1.0 });
        let img = negative_region(&joint, 60).unwrap();
        assert_eq!((img.width(), img.height()), (60, 36));
        assert_eq!(img.get_pixel(0, 0).0, [0, 0, 255]);
        let flat = JointGrid::from_fn(g, g, |_, _| 0.5);
        assert!(negative_region(&flat, 60).is_none());
    }

    #[test]
    fn line_plot_marks_the_curve() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let img = line_plot(&[Series { x: &x, y: &y, color: RED }], 200, 100, false);
        assert!(img.pixels().any(|p| p.0 == RED));
        let logged = line_plot(&[Series { x: &x, y: &y, color: BLUE }], 200, 100, true);
        assert!(logged.pixels().any(|p| p.0 == BLUE));
    }
}

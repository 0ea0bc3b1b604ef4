//! Grid containers shared by every subsystem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of samples in every marginal.
pub const MARGINAL_LEN: usize = 721;
/// Length of a flattened marginal triple.
pub const FEATURE_LEN: usize = 3 * MARGINAL_LEN;

/// `len` equally spaced points covering `[min, max]` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub min: f64,
    pub max: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(min: f64, max: f64, len: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min || len < 2 {
            return Err(Error::Config(format!("bad grid [{min}, {max}] with {len} points")));
        }
        Ok(Self { min, max, len })
    }

    /// Symmetric window `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, len: usize) -> Result<Self> {
        Self::new(-half_width, half_width, len)
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.len - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        // Evaluate from the nearer end so that symmetric grids stay exactly symmetric.
        let n = self.len - 1;
        if 2 * i <= n {
            self.min + i as f64 * self.step()
        } else {
            self.max - (n - i) as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Index of the cell `[x_i, x_{i+1})` containing `x` together with the
    /// fractional offset inside it, or `None` outside the grid.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !(x >= self.min && x <= self.max) {
            return None;
        }
        let pos = (x - self.min) / self.step();
        let i = (pos.floor() as usize).min(self.len - 2);
        Some((i, pos - i as f64))
    }

    /// Trapezoidal integral of samples taken on this grid.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len);
        let inner: f64 = values[1..values.len() - 1].iter().sum();
        self.step() * (inner + 0.5 * (values[0] + values[values.len() - 1]))
    }

    pub fn same_as(&self, other: &UniformGrid) -> bool {
        self.len == other.len
            && (self.min - other.min).abs() <= 1e-12 * self.min.abs().max(1.0)
            && (self.max - other.max).abs() <= 1e-12 * self.max.abs().max(1.0)
    }
}

/// Which variable a marginal is taken along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisLabel {
    X1,
    X13,
    U,
    X,
    P,
}

impl AxisLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            AxisLabel::X1 => "x1",
            AxisLabel::X13 => "x13",
            AxisLabel::U => "u",
            AxisLabel::X => "x",
            AxisLabel::P => "p",
        }
    }
}

impl std::fmt::Display for AxisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A sampled one-dimensional (quasi-)distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub axis: AxisLabel,
    pub grid: UniformGrid,
    pub values: Vec<f64>,
}

impl Marginal {
    pub fn new(axis: AxisLabel, grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len {
            return Err(Error::shape(grid.len, values.len()));
        }
        Ok(Self { axis, grid, values })
    }

    pub fn integral(&self) -> f64 {
        self.grid.trapezoid(&self.values)
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn argmax(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        self.grid.point(i)
    }

    /// Mean and standard deviation of the sampled profile, normalised by its own integral.
    pub fn moments(&self) -> (f64, f64) {
        let xs = self.grid.points();
        let mass = self.integral();
        let first: Vec<f64> = xs.iter().zip(&self.values).map(|(x, v)| x * v).collect();
        let mean = self.grid.trapezoid(&first) / mass;
        let second: Vec<f64> =
            xs.iter().zip(&self.values).map(|(x, v)| (x - mean) * (x - mean) * v).collect();
        (mean, (self.grid.trapezoid(&second) / mass).max(0.0).sqrt())
    }
}

/// The feature of one datum: marginals along the two joint axes plus the
/// oblique direction `u = (a + b) / sqrt(2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalTriple {
    pub first: Marginal,
    pub second: Marginal,
    pub oblique: Marginal,
}

impl MarginalTriple {
    pub fn iter(&self) -> impl Iterator<Item = &Marginal> {
        [&self.first, &self.second, &self.oblique].into_iter()
    }

    /// Row-major `3 x 721` feature vector.
    pub fn to_feature(&self) -> Vec<f32> {
        self.iter().flat_map(|m| m.values.iter().map(|&v| v as f32)).collect()
    }
}

/// Heights of a bivariate quasi-distribution on a rectangular grid.
///
/// `values[i * second.len + j]` is the height at `(first[i], second[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointGrid {
    pub first: UniformGrid,
    pub second: UniformGrid,
    pub values: Vec<f64>,
}

impl JointGrid {
    pub fn from_fn(first: UniformGrid, second: UniformGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let xs = first.points();
        let ys = second.points();
        let mut values = Vec::with_capacity(xs.len() * ys.len());
        for &x in &xs {
            for &y in &ys {
                values.push(f(x, y));
            }
        }
        Self { first, second, values }
    }

    pub fn zeros(first: UniformGrid, second: UniformGrid) -> Self {
        Self { first, second, values: vec![0.0; first.len * second.len] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.second.len + j]
    }

    pub fn cell_area(&self) -> f64 {
        self.first.step() * self.second.step()
    }

    /// 2-D trapezoidal integral.
    pub fn integral(&self) -> f64 {
        let rows: Vec<f64> = (0..self.first.len).map(|i| self.second.trapezoid(self.row(i))).collect();
        self.first.trapezoid(&rows)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.second.len;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Integrate over the second axis: one value per point of the first axis.
    pub fn integrate_second(&self) -> Vec<f64> {
        (0..self.first.len).map(|i| self.second.trapezoid(self.row(i))).collect()
    }

    /// Integrate over the first axis: one value per point of the second axis.
    pub fn integrate_first(&self) -> Vec<f64> {
        let mut column = vec![0.0; self.first.len];
        (0..self.second.len)
            .map(|j| {
                for (i, c) in column.iter_mut().enumerate() {
                    *c = self.get(i, j);
                }
                self.first.trapezoid(&column)
            })
            .collect()
    }

    /// Bilinear sample; zero outside the grid.
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let (Some((i, fx)), Some((j, fy))) = (self.first.locate(x), self.second.locate(y)) else {
            return 0.0;
        };
        let v00 = self.get(i, j);
        let v01 = self.get(i, j + 1);
        let v10 = self.get(i + 1, j);
        let v11 = self.get(i + 1, j + 1);
        (1.0 - fx) * ((1.0 - fy) * v00 + fy * v01) + fx * ((1.0 - fy) * v10 + fy * v11)
    }
}

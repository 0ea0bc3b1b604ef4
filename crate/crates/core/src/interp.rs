//! Interpolation helpers: cubic convolution on uniform grids and natural cubic
//! splines on arbitrary knots.

use crate::error::{Error, Result};
use crate::grid::UniformGrid;

/// Keys cubic-convolution interpolation (a = -1/2) of samples on `grid`,
/// evaluated at `x`. Zero outside the grid; one-sided near the ends.
pub fn cubic_uniform(grid: &UniformGrid, values: &[f64], x: f64) -> f64 {
    let Some((i, t)) = grid.locate(x) else {
        return 0.0;
    };
    let n = values.len();
    let at = |k: isize| -> f64 {
        // Quadratic extrapolation past the ends keeps the stencil third-order there.
        if k < 0 {
            3.0 * values[0] - 3.0 * values[1] + values[2]
        } else if k as usize >= n {
            3.0 * values[n - 1] - 3.0 * values[n - 2] + values[n - 3]
        } else {
            values[k as usize]
        }
    };
    let i = i as isize;
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * ((2.0 * p1)
        + (-p0 + p2) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3)
}

/// Resample `values` (on `from`) onto every point of `to`.
pub fn resample_cubic(from: &UniformGrid, values: &[f64], to: &UniformGrid) -> Vec<f64> {
    to.points().into_iter().map(|x| cubic_uniform(from, values, x)).collect()
}

/// Natural cubic spline through `(knots[i], values[i])`.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 3 || values.len() != n {
            return Err(Error::Config(format!("spline needs >= 3 matching knots, got {n}")));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("spline knots must be strictly increasing".into()));
        }
        // Tridiagonal system for the second derivatives, natural end conditions.
        let mut second = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = knots[i] - knots[i - 1];
            let h1 = knots[i + 1] - knots[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let c = h1 / 6.0;
            let d = (values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0;
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = c / denom;
            d_prime[i] = (d - a * d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            second[i] = d_prime[i] - c_prime[i] * second[i + 1];
        }
        Ok(Self { knots, values, second })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        let i = match self.knots.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - x) / h;
        let b = (x - self.knots[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }
}

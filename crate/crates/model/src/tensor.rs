//! Activations in `C x N x H x W` order, so that a layer sees one
//! `C x (N H W)` matrix for the whole batch.

use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub c: usize,
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(c: usize, n: usize, h: usize, w: usize) -> Self {
        Self { c, n, h, w, data: vec![T::zero(); c * n * h * w] }
    }

    pub fn from_vec(c: usize, n: usize, h: usize, w: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), c * n * h * w, "tensor data length");
        Self { c, n, h, w, data }
    }

    pub fn plane(&self) -> usize {
        self.h * self.w
    }

    /// Columns per channel row, `N H W`.
    pub fn cols(&self) -> usize {
        self.n * self.h * self.w
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        (self.c, self.n, self.h, self.w) == (other.c, other.n, other.h, other.w)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { c: self.c, n: self.n, h: self.h, w: self.w, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert!(self.same_shape(other), "shape mismatch in add");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
    }

    /// Per-sample `C x H x W` blocks laid out sample after sample.
    pub fn to_nchw(&self) -> Vec<T> {
        let p = self.plane();
        let mut out = vec![T::zero(); self.data.len()];
        for c in 0..self.c {
            for n in 0..self.n {
                let src = (c * self.n + n) * p;
                let dst = (n * self.c + c) * p;
                out[dst..dst + p].copy_from_slice(&self.data[src..src + p]);
            }
        }
        out
    }

    pub fn from_nchw(c: usize, n: usize, h: usize, w: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), c * n * h * w, "tensor data length");
        let p = h * w;
        let mut out = vec![T::zero(); data.len()];
        for ci in 0..c {
            for ni in 0..n {
                let src = (ni * c + ci) * p;
                let dst = (ci * n + ni) * p;
                out[dst..dst + p].copy_from_slice(&data[src..src + p]);
            }
        }
        Self { c, n, h, w, data: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nchw_round_trip() {
        let data: Vec<f64> = (0..2 * 3 * 2 * 2).map(|v| v as f64).collect();
        let t = Tensor::from_nchw(3, 2, 2, 2, &data);
        // Sample 1 channel 0 sits at NCHW offset 12; sample 0 channel 1 at 4.
        assert_eq!(t.data[4..8], data[12..16]);
        assert_eq!(t.data[8..12], data[4..8]);
        assert_eq!(t.to_nchw(), data);
    }
}

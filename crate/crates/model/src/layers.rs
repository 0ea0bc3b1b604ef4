//! Transposed convolution and dense layers with explicit backward passes.

use rand::Rng;

use crate::params::{Grads, ParamId, ParamStore};
use crate::real::{gemm, MatMut, MatRef, Real};
use crate::tensor::Tensor;

/// Upper bound on the column buffer, in elements; larger batches are
/// processed in sample chunks.
const COLUMN_BUDGET: usize = 1 << 23;

/// Transposed 2-D convolution. Weights are `Cin x (Cout k k)`; output size
/// is `(H - 1) stride - 2 pad + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvT2d {
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl ConvT2d {
    /// He-normal weights scaled by `gain`, zero bias.
    #[allow(clippy::too_many_arguments)]
    pub fn new<T: Real, R: Rng + ?Sized>(
        ps: &mut ParamStore<T>,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        pad: usize,
        gain: f64,
        rng: &mut R,
    ) -> Self {
        // Fan-in of one output pixel: cin * (k / stride)^2 taps on average.
        let fan_in = (cin * k * k) as f64 / (stride * stride) as f64;
        let std = gain * (2.0 / fan_in).sqrt();
        let weight = ps.add_normal(format!("{name}.weight"), vec![cin, cout, k, k], std, rng);
        let bias = ps.add_zeros(format!("{name}.bias"), vec![cout]);
        Self { cin, cout, k, stride, pad, weight, bias }
    }

    pub fn out_size(&self, h: usize) -> usize {
        ((h - 1) * self.stride + self.k).saturating_sub(2 * self.pad)
    }

    fn pointwise(&self) -> bool {
        self.k == 1 && self.stride == 1 && self.pad == 0
    }

    fn ck2(&self) -> usize {
        self.cout * self.k * self.k
    }

    fn chunk(&self, plane: usize) -> usize {
        (COLUMN_BUDGET / (self.ck2() * plane).max(1)).max(1)
    }

    pub fn forward<T: Real>(&self, ps: &ParamStore<T>, x: &Tensor<T>) -> Tensor<T> {
        assert_eq!(x.c, self.cin, "input channels");
        let (ho, wo) = (self.out_size(x.h), self.out_size(x.w));
        let mut y = Tensor::zeros(self.cout, x.n, ho, wo);
        let w = ps.get(self.weight);
        let wmat = MatRef::new(w, self.cin, self.ck2());
        let cols_total = x.cols();
        if self.pointwise() {
            gemm(T::one(), wmat, true, MatRef::new(&x.data, self.cin, cols_total), false, T::zero(), MatMut::new(&mut y.data, self.cout, cols_total));
        } else {
            let plane = x.plane();
            let step = self.chunk(plane);
            let mut cols = Vec::new();
            for n0 in (0..x.n).step_by(step) {
                let nc = step.min(x.n - n0);
                let width = nc * plane;
                cols.clear();
                cols.resize(self.ck2() * width, T::zero());
                let xs = MatRef::strided(&x.data[n0 * plane..], self.cin, width, cols_total);
                gemm(T::one(), wmat, true, xs, false, T::zero(), MatMut::new(&mut cols, self.ck2(), width));
                self.col2im(&cols, &mut y, n0, nc, x.h, x.w);
            }
        }
        let b = ps.get(self.bias);
        let plane_out = y.cols();
        for (co, row) in y.data.chunks_mut(plane_out).enumerate() {
            let bv = b[co];
            row.iter_mut().for_each(|v| *v = *v + bv);
        }
        y
    }

    /// Scatter-add columns for samples `n0..n0+nc` into `y`.
    fn col2im<T: Real>(&self, cols: &[T], y: &mut Tensor<T>, n0: usize, nc: usize, hi: usize, wi: usize) {
        let (ho, wo) = (y.h, y.w);
        let width = nc * hi * wi;
        let (s, p) = (self.stride as isize, self.pad as isize);
        for co in 0..self.cout {
            for ky in 0..self.k {
                for kx in 0..self.k {
                    let row = &cols[((co * self.k + ky) * self.k + kx) * width..][..width];
                    for n in 0..nc {
                        let out = &mut y.data[(co * y.n + n0 + n) * ho * wo..][..ho * wo];
                        for iy in 0..hi {
                            let oy = iy as isize * s - p + ky as isize;
                            if oy < 0 || oy >= ho as isize {
                                continue;
                            }
                            let src = &row[(n * hi + iy) * wi..][..wi];
                            let dst = &mut out[oy as usize * wo..][..wo];
                            for (ix, &v) in src.iter().enumerate() {
                                let ox = ix as isize * s - p + kx as isize;
                                if ox >= 0 && ox < wo as isize {
                                    dst[ox as usize] = dst[ox as usize] + v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Gather `dy` into column form for samples `n0..n0+nc`.
    fn im2col<T: Real>(&self, dy: &Tensor<T>, cols: &mut [T], n0: usize, nc: usize, hi: usize, wi: usize) {
        let (ho, wo) = (dy.h, dy.w);
        let width = nc * hi * wi;
        let (s, p) = (self.stride as isize, self.pad as isize);
        for co in 0..self.cout {
            for ky in 0..self.k {
                for kx in 0..self.k {
                    let row = &mut cols[((co * self.k + ky) * self.k + kx) * width..][..width];
                    for n in 0..nc {
                        let src = &dy.data[(co * dy.n + n0 + n) * ho * wo..][..ho * wo];
                        for iy in 0..hi {
                            let dst = &mut row[(n * hi + iy) * wi..][..wi];
                            let oy = iy as isize * s - p + ky as isize;
                            if oy < 0 || oy >= ho as isize {
                                dst.iter_mut().for_each(|v| *v = T::zero());
                                continue;
                            }
                            let line = &src[oy as usize * wo..][..wo];
                            for (ix, d) in dst.iter_mut().enumerate() {
                                let ox = ix as isize * s - p + kx as isize;
                                *d = if ox >= 0 && ox < wo as isize { line[ox as usize] } else { T::zero() };
                            }
                        }
                    }
                }
            }
        }
    }

    /// Accumulate parameter gradients and return `dL/dx`.
    pub fn backward<T: Real>(&self, ps: &ParamStore<T>, grads: &mut Grads<T>, x: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
        let w = ps.get(self.weight);
        let wmat = MatRef::new(w, self.cin, self.ck2());
        let mut dx = Tensor::zeros(self.cin, x.n, x.h, x.w);
        let cols_total = x.cols();
        {
            let db = grads.get_mut(self.bias);
            for (co, row) in dy.data.chunks(dy.cols()).enumerate() {
                db[co] = row.iter().fold(db[co], |acc, &v| acc + v);
            }
        }
        if self.pointwise() {
            let dcols = MatRef::new(&dy.data, self.cout, cols_total);
            gemm(T::one(), MatRef::new(&x.data, self.cin, cols_total), false, dcols, true, T::one(), MatMut::new(grads.get_mut(self.weight), self.cin, self.ck2()));
            gemm(T::one(), wmat, false, dcols, false, T::zero(), MatMut::new(&mut dx.data, self.cin, cols_total));
            return dx;
        }
        let plane = x.plane();
        let step = self.chunk(plane);
        let mut cols = Vec::new();
        for n0 in (0..x.n).step_by(step) {
            let nc = step.min(x.n - n0);
            let width = nc * plane;
            cols.clear();
            cols.resize(self.ck2() * width, T::zero());
            self.im2col(dy, &mut cols, n0, nc, x.h, x.w);
            let dcols = MatRef::new(&cols, self.ck2(), width);
            let xs = MatRef::strided(&x.data[n0 * plane..], self.cin, width, cols_total);
            gemm(T::one(), xs, false, dcols, true, T::one(), MatMut::new(grads.get_mut(self.weight), self.cin, self.ck2()));
            let dxs = MatMut::strided(&mut dx.data[n0 * plane..], self.cin, width, cols_total);
            gemm(T::one(), wmat, false, dcols, false, T::zero(), dxs);
        }
        dx
    }
}

/// Dense layer on row-major `N x fin` inputs; weights are `fout x fin`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub fin: usize,
    pub fout: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new<T: Real, R: Rng + ?Sized>(ps: &mut ParamStore<T>, name: &str, fin: usize, fout: usize, gain: f64, rng: &mut R) -> Self {
        let weight = ps.add_normal(format!("{name}.weight"), vec![fout, fin], gain * (1.0 / fin as f64).sqrt(), rng);
        let bias = ps.add_zeros(format!("{name}.bias"), vec![fout]);
        Self { fin, fout, weight, bias }
    }

    pub fn forward<T: Real>(&self, ps: &ParamStore<T>, x: &[T], n: usize) -> Vec<T> {
        let mut y = Vec::with_capacity(n * self.fout);
        for _ in 0..n {
            y.extend_from_slice(ps.get(self.bias));
        }
        gemm(
            T::one(),
            MatRef::new(x, n, self.fin),
            false,
            MatRef::new(ps.get(self.weight), self.fout, self.fin),
            true,
            T::one(),
            MatMut::new(&mut y, n, self.fout),
        );
        y
    }

    pub fn backward<T: Real>(&self, ps: &ParamStore<T>, grads: &mut Grads<T>, x: &[T], dy: &[T], n: usize) -> Vec<T> {
        {
            let db = grads.get_mut(self.bias);
            for row in dy.chunks(self.fout) {
                for (d, &v) in db.iter_mut().zip(row) {
                    *d = *d + v;
                }
            }
        }
        gemm(
            T::one(),
            MatRef::new(dy, n, self.fout),
            true,
            MatRef::new(x, n, self.fin),
            false,
            T::one(),
            MatMut::new(grads.get_mut(self.weight), self.fout, self.fin),
        );
        let mut dx = vec![T::zero(); n * self.fin];
        gemm(
            T::one(),
            MatRef::new(dy, n, self.fout),
            false,
            MatRef::new(ps.get(self.weight), self.fout, self.fin),
            false,
            T::zero(),
            MatMut::new(&mut dx, n, self.fin),
        );
        dx
    }
}

pub fn relu<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// `dy` masked by `out > 0`, where `out = relu(x)`.
pub fn relu_backward<T: Real>(out: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    let data = out.data.iter().zip(&dy.data).map(|(&o, &d)| if o > T::zero() { d } else { T::zero() }).collect();
    Tensor::from_vec(dy.c, dy.n, dy.h, dy.w, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct definition: every input pixel spreads `w[ci, co]` over a
    /// `k x k` patch at `stride * i - pad`.
    fn reference(layer: &ConvT2d, ps: &ParamStore<f64>, x: &Tensor<f64>) -> Tensor<f64> {
        let (ho, wo) = (layer.out_size(x.h), layer.out_size(x.w));
        let w = ps.get(layer.weight);
        let b = ps.get(layer.bias);
        let mut y = Tensor::zeros(layer.cout, x.n, ho, wo);
        for co in 0..layer.cout {
            for n in 0..x.n {
                for oy in 0..ho {
                    for ox in 0..wo {
                        y.data[((co * x.n + n) * ho + oy) * wo + ox] = b[co];
                    }
                }
            }
        }
        for ci in 0..layer.cin {
            for n in 0..x.n {
                for iy in 0..x.h {
                    for ix in 0..x.w {
                        let v = x.data[((ci * x.n + n) * x.h + iy) * x.w + ix];
                        for co in 0..layer.cout {
                            for ky in 0..layer.k {
                                for kx in 0..layer.k {
                                    let oy = (iy * layer.stride + ky) as isize - layer.pad as isize;
                                    let ox = (ix * layer.stride + kx) as isize - layer.pad as isize;
                                    if oy >= 0 && ox >= 0 && (oy as usize) < ho && (ox as usize) < wo {
                                        let wi = ((ci * layer.cout + co) * layer.k + ky) * layer.k + kx;
                                        y.data[((co * x.n + n) * ho + oy as usize) * wo + ox as usize] += v * w[wi];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        y
    }

    fn random_tensor(c: usize, n: usize, h: usize, rng: &mut ChaCha8Rng) -> Tensor<f64> {
        Tensor::from_vec(c, n, h, h, (0..c * n * h * h).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    #[test]
    fn forward_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(k, s, p) in &[(1, 1, 0), (3, 1, 1), (4, 2, 1), (2, 2, 0)] {
            let mut ps = ParamStore::<f64>::new();
            let layer = ConvT2d::new(&mut ps, "c", 3, 2, k, s, p, 1.0, &mut rng);
            ps.get_mut(layer.bias).copy_from_slice(&[0.3, -0.2]);
            let x = random_tensor(3, 2, 5, &mut rng);
            let y = layer.forward(&ps, &x);
            let want = reference(&layer, &ps, &x);
            assert!(y.same_shape(&want));
            for (a, b) in y.data.iter().zip(&want.data) {
                assert!((a - b).abs() < 1e-12, "k={k} s={s} p={p}");
            }
        }
    }

    #[test]
    fn upsampling_sizes() {
        let mut ps = ParamStore::<f32>::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(ConvT2d::new(&mut ps, "a", 1, 1, 4, 2, 1, 1.0, &mut rng).out_size(16), 32);
        assert_eq!(ConvT2d::new(&mut ps, "b", 1, 1, 2, 2, 0, 1.0, &mut rng).out_size(16), 32);
        assert_eq!(ConvT2d::new(&mut ps, "c", 1, 1, 3, 1, 1, 1.0, &mut rng).out_size(16), 16);
    }

    /// Loss `sum(y * r)` for a fixed random `r`, so `dL/dy = r`.
    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &(k, s, p) in &[(1, 1, 0), (3, 1, 1), (4, 2, 1)] {
            let mut ps = ParamStore::<f64>::new();
            let layer = ConvT2d::new(&mut ps, "c", 2, 3, k, s, p, 1.0, &mut rng);
            let x = random_tensor(2, 2, 4, &mut rng);
            let y = layer.forward(&ps, &x);
            let r = random_tensor(y.c, y.n, y.h, &mut rng);
            let loss = |ps: &ParamStore<f64>, x: &Tensor<f64>| -> f64 {
                layer.forward(ps, x).data.iter().zip(&r.data).map(|(a, b)| a * b).sum()
            };
            let mut grads = ps.zero_grads();
            let dx = layer.backward(&ps, &mut grads, &x, &r);
            let h = 1e-6;
            for idx in 0..x.data.len() {
                let mut xp = x.clone();
                xp.data[idx] += h;
                let mut xm = x.clone();
                xm.data[idx] -= h;
                let fd = (loss(&ps, &xp) - loss(&ps, &xm)) / (2.0 * h);
                assert!((fd - dx.data[idx]).abs() < 1e-7, "dx k={k} idx={idx} fd={fd} an={}", dx.data[idx]);
            }
            for id in [layer.weight, layer.bias] {
                for idx in 0..ps.get(id).len() {
                    let mut pp = ps.clone();
                    pp.get_mut(id)[idx] += h;
                    let mut pm = ps.clone();
                    pm.get_mut(id)[idx] -= h;
                    let fd = (loss(&pp, &x) - loss(&pm, &x)) / (2.0 * h);
                    assert!((fd - grads.get(id)[idx]).abs() < 1e-7, "param k={k}");
                }
            }
        }
    }

    #[test]
    fn linear_backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ps = ParamStore::<f64>::new();
        let layer = Linear::new(&mut ps, "l", 5, 4, 1.0, &mut rng);
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |ps: &ParamStore<f64>, x: &[f64]| -> f64 { layer.forward(ps, x, 2).iter().zip(&r).map(|(a, b)| a * b).sum() };
        let mut grads = ps.zero_grads();
        let dx = layer.backward(&ps, &mut grads, &x, &r, 2);
        let h = 1e-6;
        for idx in 0..x.len() {
            let mut xp = x.clone();
            xp[idx] += h;
            let mut xm = x.clone();
            xm[idx] -= h;
            assert!(((loss(&ps, &xp) - loss(&ps, &xm)) / (2.0 * h) - dx[idx]).abs() < 1e-8);
        }
        for idx in 0..20 {
            let mut pp = ps.clone();
            pp.get_mut(layer.weight)[idx] += h;
            let mut pm = ps.clone();
            pm.get_mut(layer.weight)[idx] -= h;
            assert!(((loss(&pp, &x) - loss(&pm, &x)) / (2.0 * h) - grads.get(layer.weight)[idx]).abs() < 1e-8);
        }
    }
}

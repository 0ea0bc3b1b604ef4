//! The two residual building blocks. Both use pre-activation: the main
//! stream starts with a ReLU, the skip path carries the raw input.

use rand::Rng;

use crate::layers::{relu, relu_backward, ConvT2d};
use crate::params::{Grads, ParamStore};
use crate::real::Real;
use crate::tensor::Tensor;

/// Gain of the last main-stream layer; small so each block starts close
/// to its skip path.
const LAST_GAIN: f64 = 0.2;

/// Main-stream activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct MainCache<T> {
    a0: Tensor<T>,
    a1: Tensor<T>,
    a2: Tensor<T>,
}

/// Three layers with ReLUs in front of each.
#[derive(Debug, Clone, PartialEq)]
struct MainStream {
    l1: ConvT2d,
    l2: ConvT2d,
    l3: ConvT2d,
}

impl MainStream {
    fn forward<T: Real>(&self, ps: &ParamStore<T>, x: &Tensor<T>) -> (Tensor<T>, MainCache<T>) {
        let a0 = relu(x);
        let a1 = relu(&self.l1.forward(ps, &a0));
        let a2 = relu(&self.l2.forward(ps, &a1));
        let y = self.l3.forward(ps, &a2);
        (y, MainCache { a0, a1, a2 })
    }

    fn backward<T: Real>(&self, ps: &ParamStore<T>, g: &mut Grads<T>, c: &MainCache<T>, dy: &Tensor<T>) -> Tensor<T> {
        let d = self.l3.backward(ps, g, &c.a2, dy);
        let d = self.l2.backward(ps, g, &c.a1, &relu_backward(&c.a2, &d));
        let d = self.l1.backward(ps, g, &c.a0, &relu_backward(&c.a1, &d));
        relu_backward(&c.a0, &d)
    }
}

/// Bottleneck width of the main stream.
fn mid_width(c: usize) -> usize {
    (c / 2).max(4)
}

/// `x + F(x)` with a 1x1, 3x3, 1x1 main stream.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityBlock {
    main: MainStream,
}

impl IdentityBlock {
    pub fn new<T: Real, R: Rng + ?Sized>(ps: &mut ParamStore<T>, name: &str, c: usize, rng: &mut R) -> Self {
        let m = mid_width(c);
        Self {
            main: MainStream {
                l1: ConvT2d::new(ps, &format!("{name}.l1"), c, m, 1, 1, 0, 1.0, rng),
                l2: ConvT2d::new(ps, &format!("{name}.l2"), m, m, 3, 1, 1, 1.0, rng),
                l3: ConvT2d::new(ps, &format!("{name}.l3"), m, c, 1, 1, 0, LAST_GAIN, rng),
            },
        }
    }

    pub fn forward<T: Real>(&self, ps: &ParamStore<T>, x: &Tensor<T>) -> (Tensor<T>, MainCache<T>) {
        let (mut y, cache) = self.main.forward(ps, x);
        y.add_assign(x);
        (y, cache)
    }

    pub fn backward<T: Real>(&self, ps: &ParamStore<T>, g: &mut Grads<T>, cache: &MainCache<T>, dy: &Tensor<T>) -> Tensor<T> {
        let mut dx = self.main.backward(ps, g, cache, dy);
        dx.add_assign(dy);
        dx
    }

    /// Parameters of the main stream, for zeroing in tests.
    pub fn main_params(&self) -> [crate::params::ParamId; 6] {
        let m = &self.main;
        [m.l1.weight, m.l1.bias, m.l2.weight, m.l2.bias, m.l3.weight, m.l3.bias]
    }
}

/// `S(x) + F(x)` where the main stream's middle layer is a transposed
/// convolution (4x4 stride 2 when upsampling, else 3x3 stride 1) and `S`
/// is a projection (2x2 stride 2, or 1x1).
#[derive(Debug, Clone, PartialEq)]
pub struct DeconvBlock {
    main: MainStream,
    shortcut: ConvT2d,
}

impl DeconvBlock {
    pub fn new<T: Real, R: Rng + ?Sized>(ps: &mut ParamStore<T>, name: &str, cin: usize, cout: usize, upsample: bool, rng: &mut R) -> Self {
        let m = mid_width(cout);
        let (k, s, p) = if upsample { (4, 2, 1) } else { (3, 1, 1) };
        let shortcut = if upsample {
            ConvT2d::new(ps, &format!("{name}.shortcut"), cin, cout, 2, 2, 0, 0.5, rng)
        } else {
            ConvT2d::new(ps, &format!("{name}.shortcut"), cin, cout, 1, 1, 0, 0.5, rng)
        };
        Self {
            main: MainStream {
                l1: ConvT2d::new(ps, &format!("{name}.l1"), cin, m, 1, 1, 0, 1.0, rng),
                l2: ConvT2d::new(ps, &format!("{name}.l2"), m, m, k, s, p, 1.0, rng),
                l3: ConvT2d::new(ps, &format!("{name}.l3"), m, cout, 1, 1, 0, LAST_GAIN, rng),
            },
            shortcut,
        }
    }

    pub fn forward<T: Real>(&self, ps: &ParamStore<T>, x: &Tensor<T>) -> (Tensor<T>, MainCache<T>) {
        let (mut y, cache) = self.main.forward(ps, x);
        y.add_assign(&self.shortcut.forward(ps, x));
        (y, cache)
    }

    pub fn backward<T: Real>(&self, ps: &ParamStore<T>, g: &mut Grads<T>, x: &Tensor<T>, cache: &MainCache<T>, dy: &Tensor<T>) -> Tensor<T> {
        let mut dx = self.main.backward(ps, g, cache, dy);
        dx.add_assign(&self.shortcut.backward(ps, g, x, dy));
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn input(c: usize, n: usize, h: usize, rng: &mut ChaCha8Rng) -> Tensor<f64> {
        Tensor::from_vec(c, n, h, h, (0..c * n * h * h).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    #[test]
    fn zeroed_identity_block_is_the_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ps = ParamStore::<f64>::new();
        let block = IdentityBlock::new(&mut ps, "b", 6, &mut rng);
        for id in block.main_params() {
            ps.get_mut(id).iter_mut().for_each(|v| *v = 0.0);
        }
        let x = input(6, 3, 5, &mut rng);
        assert_eq!(block.forward(&ps, &x).0, x);
    }

    #[test]
    fn deconv_block_doubles_resolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ps = ParamStore::<f64>::new();
        let up = DeconvBlock::new(&mut ps, "u", 4, 6, true, &mut rng);
        let flat = DeconvBlock::new(&mut ps, "f", 4, 6, false, &mut rng);
        let x = input(4, 2, 5, &mut rng);
        let y = up.forward(&ps, &x).0;
        assert_eq!((y.c, y.n, y.h, y.w), (6, 2, 10, 10));
        let y = flat.forward(&ps, &x).0;
        assert_eq!((y.c, y.n, y.h, y.w), (6, 2, 5, 5));
    }

    #[test]
    fn block_gradients_match_finite_differences() {
        for upsample in [true, false] {
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            let mut ps = ParamStore::<f64>::new();
            let block = DeconvBlock::new(&mut ps, "u", 3, 4, upsample, &mut rng);
            // Zero biases put clipped pixels exactly on the ReLU kink.
            for p in ps.params.iter_mut().filter(|p| p.name.ends_with("bias")) {
                p.value.iter_mut().for_each(|v| *v = rng.random_range(-0.1..0.1));
            }
            let x = input(3, 2, 3, &mut rng);
            let y = block.forward(&ps, &x).0;
            let r = input(y.c, y.n, y.h, &mut rng);
            let loss = |ps: &ParamStore<f64>, x: &Tensor<f64>| -> f64 {
                block.forward(ps, x).0.data.iter().zip(&r.data).map(|(a, b)| a * b).sum()
            };
            let mut g = ps.zero_grads();
            let (_, cache) = block.forward(&ps, &x);
            let dx = block.backward(&ps, &mut g, &x, &cache, &r);
            let h = 1e-6;
            for idx in [0, 7, 20, x.data.len() - 1] {
                let mut xp = x.clone();
                xp.data[idx] += h;
                let mut xm = x.clone();
                xm.data[idx] -= h;
                let fd = (loss(&ps, &xp) - loss(&ps, &xm)) / (2.0 * h);
                assert!((fd - dx.data[idx]).abs() < 1e-6 * (1.0 + fd.abs()));
            }
            for p in 0..ps.params.len() {
                for idx in 0..ps.params[p].value.len() {
                    let mut pp = ps.clone();
                    pp.params[p].value[idx] += h;
                    let mut pm = ps.clone();
                    pm.params[p].value[idx] -= h;
                    let fd = (loss(&pp, &x) - loss(&pm, &x)) / (2.0 * h);
                    let an = g.0[p][idx];
                    assert!((fd - an).abs() < 1e-6 * (1.0 + fd.abs()), "{} [{idx}] fd {fd} an {an}", ps.params[p].name);
                }
            }
        }
    }
}

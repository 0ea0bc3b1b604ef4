//! Adam with bias correction.

use crate::params::{Grads, ParamStore};

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<Vec<f32>>,
    pub v: Vec<Vec<f32>>,
}

impl Adam {
    pub fn new(params: &ParamStore<f32>) -> Self {
        let zeros: Vec<Vec<f32>> = params.params.iter().map(|p| vec![0.0; p.value.len()]).collect();
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: zeros.clone(), v: zeros }
    }

    /// One update with step size `lr`; `scale` multiplies the gradients
    /// first (used for norm clipping).
    pub fn update(&mut self, params: &mut ParamStore<f32>, grads: &Grads<f32>, lr: f64, scale: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2) = (self.beta1 as f32, self.beta2 as f32);
        let step = (lr * c2.sqrt() / c1) as f32;
        let eps = (self.eps * c2.sqrt()) as f32;
        let scale = scale as f32;
        for (((p, g), m), v) in params.params.iter_mut().zip(&grads.0).zip(&mut self.m).zip(&mut self.v) {
            for (((w, &g), m), v) in p.value.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                let g = g * scale;
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *w -= step * *m / (v.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_each_weight_by_lr() {
        let mut ps = ParamStore::<f32>::new();
        ps.add("w".into(), vec![3], vec![1.0, -2.0, 0.5]);
        let mut adam = Adam::new(&ps);
        let g = crate::params::Grads(vec![vec![0.3, -4.0, 1e-3]]);
        adam.update(&mut ps, &g, 0.01, 1.0);
        let want = [0.99, -1.99, 0.49];
        for (a, b) in ps.params[0].value.iter().zip(want) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut ps = ParamStore::<f32>::new();
        ps.add("w".into(), vec![2], vec![3.0, -1.0]);
        let mut adam = Adam::new(&ps);
        for _ in 0..2000 {
            let w = &ps.params[0].value;
            let g = crate::params::Grads(vec![vec![2.0 * (w[0] - 1.0), 2.0 * (w[1] + 0.5)]]);
            adam.update(&mut ps, &g, 0.01, 1.0);
        }
        assert!((ps.params[0].value[0] - 1.0).abs() < 1e-3);
        assert!((ps.params[0].value[1] + 0.5).abs() < 1e-3);
    }
}

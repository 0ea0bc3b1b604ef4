//! Flat parameter storage shared by all layers.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T> {
    pub params: Vec<Param<T>>,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self { params: Vec::new() }
    }

    pub fn add(&mut self, name: String, shape: Vec<usize>, value: Vec<T>) -> ParamId {
        assert_eq!(shape.iter().product::<usize>(), value.len(), "parameter {name} has wrong length");
        self.params.push(Param { name, shape, value });
        ParamId(self.params.len() - 1)
    }

    /// Normal(0, std) entries.
    pub fn add_normal<R: Rng + ?Sized>(&mut self, name: String, shape: Vec<usize>, std: f64, rng: &mut R) -> ParamId {
        let n = shape.iter().product();
        let dist = Normal::new(0.0, std).expect("finite std");
        let value = (0..n).map(|_| T::of(dist.sample(rng))).collect();
        self.add(name, shape, value)
    }

    pub fn add_zeros(&mut self, name: String, shape: Vec<usize>) -> ParamId {
        let n = shape.iter().product();
        self.add(name, shape, vec![T::zero(); n])
    }

    pub fn get(&self, id: ParamId) -> &[T] {
        &self.params[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [T] {
        &mut self.params[id.0].value
    }

    pub fn count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grads(&self) -> Grads<T> {
        Grads(self.params.iter().map(|p| vec![T::zero(); p.value.len()]).collect())
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    value: p.value.iter().map(|v| U::of(v.as_f64())).collect(),
                })
                .collect(),
        }
    }
}

/// Gradient buffers parallel to a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads<T>(pub Vec<Vec<T>>);

impl<T: Real> Grads<T> {
    pub fn get_mut(&mut self, id: ParamId) -> &mut [T] {
        &mut self.0[id.0]
    }

    pub fn get(&self, id: ParamId) -> &[T] {
        &self.0[id.0]
    }

    pub fn fill_zero(&mut self) {
        for g in &mut self.0 {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt()
    }
}

use rand::Rng;
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::SplitMix64;

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Seeded generator used for weight initialisation, shuffling and data synthesis.
pub type SeededRng = SplitMix64;

pub fn seeded_rng(seed: u64) -> SeededRng {
    SplitMix64::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct Parameter<S> {
    pub name: String,
    pub value: Tensor<S>,
    pub grad: Tensor<S>,
}

/// Ordered collection of named trainable tensors.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<S> {
    params: Vec<Parameter<S>>,
}

impl<S: Scalar> ParamStore<S> {
    pub fn new() -> Self {
        ParamStore { params: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<S>) -> Result<ParamId> {
        let name = name.into();
        if self.params.iter().any(|p| p.name == name) {
            return Err(Error::invalid(format!("duplicate parameter name '{name}'")));
        }
        let grad = Tensor::zeros(value.shape());
        self.params.push(Parameter { name, value, grad });
        Ok(ParamId(self.params.len() - 1))
    }

    /// Adds a parameter drawn uniformly from `(-k, k)` with `k = sqrt(1 / fan_in)`.
    pub fn add_uniform(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        fan_in: usize,
        rng: &mut SeededRng,
    ) -> Result<ParamId> {
        let k = (1.0 / fan_in as f64).sqrt();
        let value = Tensor::from_fn(shape, |_| S::lit(rng.random_range(-k..k)));
        self.add(name, value)
    }

    pub fn get(&self, id: ParamId) -> &Parameter<S> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter<S> {
        &mut self.params[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter<S>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter<S>> {
        self.params.iter_mut()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(S::zero());
        }
    }

    /// Total number of scalar weights.
    pub fn count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }
}

/// Stochastic gradient descent with heavy-ball momentum:
/// `v <- momentum * v + grad; value <- value - lr * v`.
#[derive(Clone, Debug)]
pub struct Sgd<S> {
    lr: S,
    momentum: S,
    velocity: Vec<Tensor<S>>,
}

impl<S: Scalar> Sgd<S> {
    pub fn new(lr: S, momentum: S) -> Result<Self> {
        if !lr.is_finite() || lr < S::zero() {
            return Err(Error::invalid(format!("learning rate must be finite and non-negative, got {lr}")));
        }
        if !(momentum >= S::zero() && momentum < S::one()) {
            return Err(Error::invalid(format!("momentum must lie in [0, 1), got {momentum}")));
        }
        Ok(Sgd { lr, momentum, velocity: Vec::new() })
    }

    /// Applies one update and zeroes the gradients. Nothing is modified if any
    /// gradient is non-finite.
    pub fn step(&mut self, store: &mut ParamStore<S>) -> Result<()> {
        if let Some(bad) = store.iter().find(|p| !p.grad.all_finite()) {
            return Err(Error::Numeric(format!("non-finite gradient in parameter '{}'", bad.name)));
        }
        if self.velocity.len() != store.len() {
            self.velocity = store.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        }
        for (p, v) in store.iter_mut().zip(&mut self.velocity) {
            for ((w, vel), &g) in p.value.data_mut().iter_mut().zip(v.data_mut()).zip(p.grad.data()) {
                *vel = self.momentum * *vel + g;
                *w -= self.lr * *vel;
            }
            p.grad.fill(S::zero());
        }
        Ok(())
    }
}

//! First-order optimizers over the trainable entries of a [`ParamStore`].

use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig {
    Adam { beta1: f64, beta2: f64, eps: f64 },
    Sgd { momentum: f64 },
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

pub struct Optimizer<T> {
    config: OptimizerConfig,
    learning_rate: f64,
    step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(config: OptimizerConfig, learning_rate: f64, store: &ParamStore<T>) -> Self {
        let zeros = || store.iter().map(|p| vec![T::zero(); if p.trainable { p.value.len() } else { 0 }]).collect();
        Optimizer { config, learning_rate, step: 0, first: zeros(), second: zeros() }
    }

    /// Applies one update from the accumulated gradients.
    pub fn step(&mut self, store: &mut ParamStore<T>) {
        self.step += 1;
        let lr = self.learning_rate;
        for ((p, m), v) in store.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            if !p.trainable {
                continue;
            }
            match self.config {
                OptimizerConfig::Adam { beta1, beta2, eps } => {
                    let c1 = 1.0 - beta1.powi(self.step as i32);
                    let c2 = 1.0 - beta2.powi(self.step as i32);
                    let (b1, b2) = (T::of(beta1), T::of(beta2));
                    let (nb1, nb2) = (T::of(1.0 - beta1), T::of(1.0 - beta2));
                    for (((w, &g), mi), vi) in p.value.iter_mut().zip(&p.grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *mi = b1 * *mi + nb1 * g;
                        *vi = b2 * *vi + nb2 * g * g;
                        let mhat = mi.f64() / c1;
                        let vhat = vi.f64() / c2;
                        *w -= T::of(lr * mhat / (vhat.sqrt() + eps));
                    }
                }
                OptimizerConfig::Sgd { momentum } => {
                    let mu = T::of(momentum);
                    for ((w, &g), mi) in p.value.iter_mut().zip(&p.grad).zip(m.iter_mut()) {
                        *mi = mu * *mi + g;
                        *w -= T::of(lr) * *mi;
                    }
                }
            }
        }
    }
}

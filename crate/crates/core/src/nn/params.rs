use serde::{Deserialize, Serialize};

use super::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

/// A named array with its gradient. Non-trainable entries hold buffers such
/// as batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<T>,
    pub grad: Vec<T>,
    pub trainable: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore { params: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, shape: Vec<usize>, value: Vec<T>, trainable: bool) -> ParamId {
        assert_eq!(shape.iter().product::<usize>(), value.len(), "parameter shape");
        let grad = vec![T::zero(); value.len()];
        self.params.push(Param { name: name.into(), shape, value, grad, trainable });
        ParamId(self.params.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Param<T> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param<T> {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &[T] {
        &self.params[id.0].value
    }

    pub fn accumulate_grad(&mut self, id: ParamId, g: &[T]) {
        for (a, &b) in self.params[id.0].grad.iter_mut().zip(g) {
            *a += b;
        }
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(T::zero());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<T>> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Number of real scalars that receive gradients.
    pub fn trainable_count(&self) -> usize {
        self.params.iter().filter(|p| p.trainable).map(|p| p.value.len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    value: p.value.iter().map(|v| U::of(v.f64())).collect(),
                    grad: p.grad.iter().map(|v| U::of(v.f64())).collect(),
                    trainable: p.trainable,
                })
                .collect(),
        }
    }

    /// Overwrites values from `(name, shape, values)` triples; every entry of
    /// the store must be present with a matching shape.
    pub fn load_values(&mut self, entries: &[(String, Vec<usize>, Vec<f32>)]) -> Result<()> {
        if entries.len() != self.params.len() {
            return Err(Error::Format(format!(
                "checkpoint holds {} arrays, model has {}",
                entries.len(),
                self.params.len()
            )));
        }
        for (p, (name, shape, values)) in self.params.iter_mut().zip(entries) {
            if &p.name != name || &p.shape != shape {
                return Err(Error::Format(format!(
                    "checkpoint entry {name} {shape:?} does not match model entry {} {:?}",
                    p.name, p.shape
                )));
            }
            for (dst, &v) in p.value.iter_mut().zip(values) {
                *dst = T::of(v as f64);
            }
        }
        Ok(())
    }
}

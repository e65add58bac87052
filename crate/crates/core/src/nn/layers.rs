//! Parameterized layers. Each layer owns [`ParamId`]s into a shared store
//! and records itself on a [`Tape`] when applied.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::ops::{self, BnCache, ConvGeometry};
use super::params::{ParamId, ParamStore};
use super::tape::{BnSaved, Mode, NodeId, Tape};
use super::tensor::{FeatureMap, Value};
use super::Scalar;
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

fn normal_init<T: Scalar>(rng: &mut Rng, n: usize, std: f64) -> Vec<T> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::of(std * z)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvWeights {
    Real(ParamId),
    Complex { re: ParamId, im: ParamId },
}

/// 1D convolution without bias. A complex layer holds `k_r` and `k_i`
/// (two reals per complex tap); a real layer holds one real tap per
/// input/output channel pair.
#[derive(Debug, Clone)]
pub struct Conv {
    pub name: String,
    pub weights: ConvWeights,
    pub geometry: ConvGeometry,
}

impl Conv {
    /// He-style initialization: a real layer draws `N(0, 2/fan_in)`; a complex
    /// layer draws each part from `N(0, 1/fan_in)` so `E|k|^2 = 2/fan_in`.
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        geometry: ConvGeometry,
        complex: bool,
        rng: &mut Rng,
    ) -> Self {
        let shape = vec![geometry.out_channels, geometry.in_channels, geometry.taps];
        let n = geometry.weight_len();
        let fan_in = (geometry.in_channels * geometry.taps) as f64;
        let weights = if complex {
            let std = (1.0 / fan_in).sqrt();
            let re = store.add(format!("{name}.weight_re"), shape.clone(), normal_init(rng, n, std), true);
            let im = store.add(format!("{name}.weight_im"), shape, normal_init(rng, n, std), true);
            ConvWeights::Complex { re, im }
        } else {
            let std = (2.0 / fan_in).sqrt();
            ConvWeights::Real(store.add(format!("{name}.weight"), shape, normal_init(rng, n, std), true))
        };
        Conv { name: name.into(), weights, geometry }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.weights, ConvWeights::Complex { .. })
    }

    pub fn parameter_count(&self) -> usize {
        let per = self.geometry.weight_len();
        if self.is_complex() {
            2 * per
        } else {
            per
        }
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, x: NodeId) -> Result<NodeId> {
        let xm = tape.map(x);
        let [cin, _, len] = xm.shape();
        let g = self.geometry;
        if cin != g.in_channels {
            return Err(Error::dim(format!("{}: expected {} input channels, got {cin}", self.name, g.in_channels)));
        }
        if g.out_len(len).is_none() {
            return Err(Error::dim(format!("{}: length {len} shorter than kernel {}", self.name, g.taps)));
        }
        match self.weights {
            ConvWeights::Real(w) => {
                if xm.is_complex() {
                    return Err(Error::dim(format!("{}: real conv applied to complex input", self.name)));
                }
                let y = ops::conv_forward(&xm.planes[0], store.value(w), &g);
                Ok(tape.record_conv(x, w, g, y))
            }
            ConvWeights::Complex { re, im } => {
                if !xm.is_complex() {
                    return Err(Error::dim(format!("{}: complex conv applied to real input", self.name)));
                }
                let y = ops::complex_conv_forward(&xm.planes[0], &xm.planes[1], store.value(re), store.value(im), &g);
                Ok(tape.record_complex_conv(x, re, im, g, y))
            }
        }
    }
}

/// Batch-norm applied independently to every plane: a complex layer keeps a
/// separate scale, shift and running statistics for the real and the
/// imaginary parts of each channel.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub name: String,
    pub channels: usize,
    pub planes: usize,
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNorm {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, channels: usize, planes: usize) -> Self {
        let n = channels * planes;
        let shape = vec![planes, channels];
        BatchNorm {
            name: name.into(),
            channels,
            planes,
            gamma: store.add(format!("{name}.gamma"), shape.clone(), vec![T::one(); n], true),
            beta: store.add(format!("{name}.beta"), shape.clone(), vec![T::zero(); n], true),
            running_mean: store.add(format!("{name}.running_mean"), shape.clone(), vec![T::zero(); n], false),
            running_var: store.add(format!("{name}.running_var"), shape, vec![T::one(); n], false),
            momentum: BN_MOMENTUM,
            eps: BN_EPS,
        }
    }

    pub fn parameter_count(&self) -> usize {
        2 * self.channels * self.planes
    }

    pub fn forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        store: &mut ParamStore<T>,
        x: NodeId,
        mode: Mode,
    ) -> Result<NodeId> {
        let xm = tape.map(x);
        let [c, batch, len] = xm.shape();
        if c != self.channels || xm.planes.len() != self.planes {
            return Err(Error::dim(format!(
                "{}: expected {} channels x {} planes, got {c} x {}",
                self.name,
                self.channels,
                self.planes,
                xm.planes.len()
            )));
        }
        let gamma = store.value(self.gamma).to_vec();
        let beta = store.value(self.beta).to_vec();
        match mode {
            Mode::Train => {
                if batch < 2 {
                    return Err(Error::invalid(format!(
                        "{}: train-mode batch-norm needs a batch of at least 2 (zero variance), got {batch}",
                        self.name
                    )));
                }
                let mut planes = Vec::with_capacity(self.planes);
                let mut caches: Vec<BnCache<T>> = Vec::with_capacity(self.planes);
                let mut means = Vec::with_capacity(c * self.planes);
                let mut vars = Vec::with_capacity(c * self.planes);
                for (p, plane) in xm.planes.iter().enumerate() {
                    let (y, cache, mean, var) =
                        ops::bn_train_forward(plane, &gamma[p * c..][..c], &beta[p * c..][..c], self.eps);
                    planes.push(y);
                    caches.push(cache);
                    means.extend(mean);
                    vars.extend(var);
                }
                let n = (batch * len) as f64;
                let unbias = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
                let m = self.momentum;
                let rm = &mut store.get_mut(self.running_mean).value;
                for (r, &v) in rm.iter_mut().zip(&means) {
                    *r = T::of((1.0 - m) * r.f64() + m * v.f64());
                }
                let rv = &mut store.get_mut(self.running_var).value;
                for (r, &v) in rv.iter_mut().zip(&vars) {
                    *r = T::of((1.0 - m) * r.f64() + m * v.f64() * unbias);
                }
                Ok(tape.record_bn(x, self.gamma, self.beta, self.eps, BnSaved::Train(caches), FeatureMap { planes }))
            }
            Mode::Eval => {
                let mean = store.value(self.running_mean).to_vec();
                let var = store.value(self.running_var).to_vec();
                let planes = xm
                    .planes
                    .iter()
                    .enumerate()
                    .map(|(p, plane)| {
                        let r = p * c..(p + 1) * c;
                        ops::bn_eval_forward(
                            plane,
                            &gamma[r.clone()],
                            &beta[r.clone()],
                            &mean[r.clone()],
                            &var[r],
                            self.eps,
                        )
                    })
                    .collect();
                Ok(tape.record_bn(
                    x,
                    self.gamma,
                    self.beta,
                    self.eps,
                    BnSaved::Eval { mean, var },
                    FeatureMap { planes },
                ))
            }
        }
    }
}

/// Real affine layer `y = x W^T + b`, `W` of shape `(out, in)`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub name: String,
    pub in_features: usize,
    pub out_features: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    /// Weights and bias uniform in `(-1/sqrt(in), 1/sqrt(in))`.
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_features: usize,
        out_features: usize,
        rng: &mut Rng,
    ) -> Self {
        let bound = 1.0 / (in_features as f64).sqrt();
        let mut uniform = |n: usize| -> Vec<T> { (0..n).map(|_| T::of(rng.random_range(-bound..bound))).collect() };
        let w = uniform(in_features * out_features);
        let b = uniform(out_features);
        Linear {
            name: name.into(),
            in_features,
            out_features,
            weight: store.add(format!("{name}.weight"), vec![out_features, in_features], w, true),
            bias: store.add(format!("{name}.bias"), vec![out_features], b, true),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.out_features * (self.in_features + 1)
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, x: NodeId) -> Result<NodeId> {
        let xm = match tape.value(x) {
            Value::Matrix(m) => m,
            Value::Map(_) => return Err(Error::dim(format!("{}: expected pooled features", self.name))),
        };
        if xm.cols != self.in_features {
            return Err(Error::dim(format!("{}: expected {} features, got {}", self.name, self.in_features, xm.cols)));
        }
        let y = ops::linear_forward(xm, store.value(self.weight), store.value(self.bias), self.out_features);
        Ok(tape.record_linear(x, self.weight, self.bias, y))
    }
}

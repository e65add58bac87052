//! 1D residual networks in real, IQ two-channel and complex arithmetic.
//!
//! Layout: stem (strided conv, BN, ReLU, 3-wide strided max-pool), four
//! stages of basic blocks at widths `w, 2w, 4w, 8w`, then global average
//! pooling, real/imaginary concatenation and one real affine head.

mod config;

pub use config::{blocks_per_stage, Arithmetic, Head, ModelConfig, SUPPORTED_DEPTHS, TOTAL_STRIDE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::layers::ConvWeights;
use crate::nn::ops::ConvGeometry;
use crate::nn::{
    BatchNorm, Checkpoint, ComplexTensor, Conv, FeatureMap, Linear, Matrix, Mode, NodeId, ParamStore, Scalar, Tape,
    Tensor3, Value,
};
use crate::rng::rng_from;

#[derive(Debug, Clone)]
struct Block {
    conv1: Conv,
    bn1: BatchNorm,
    conv2: Conv,
    bn2: BatchNorm,
    shortcut: Option<(Conv, BatchNorm)>,
}

#[derive(Debug, Clone)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub store: ParamStore<T>,
    stem: Conv,
    stem_bn: BatchNorm,
    blocks: Vec<Block>,
    head: Linear,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerInfo {
    pub name: String,
    pub kind: String,
    /// `(channels, length)` of the layer output; complex channels for a
    /// complex model.
    pub output: (usize, usize),
    pub parameters: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub config: ModelConfig,
    pub real_parameter_count: usize,
    pub layers: Vec<LayerInfo>,
    /// Input samples seen by one output of the last stage.
    pub receptive_field: usize,
}

impl<T: Scalar> Model<T> {
    /// Builds a freshly initialized network; weights are drawn from `seed`.
    pub fn build(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let cfg = config.clone();
        let complex = cfg.arithmetic == Arithmetic::Complex;
        let planes = cfg.arithmetic.planes();
        let mut store = ParamStore::new();
        let mut rng = rng_from(seed, &[]);
        let widths = cfg.stage_widths();
        let geom = |cin: usize, cout: usize, taps: usize, stride: usize| ConvGeometry {
            in_channels: cin,
            out_channels: cout,
            taps,
            stride,
            pad: taps / 2,
        };
        let stem = Conv::new(
            &mut store,
            "stem.conv",
            geom(cfg.arithmetic.input_channels(), widths[0], cfg.first_kernel, 2),
            complex,
            &mut rng,
        );
        let stem_bn = BatchNorm::new(&mut store, "stem.bn", widths[0], planes);
        let mut blocks = Vec::new();
        let mut cin = widths[0];
        for (s, (&n, &w)) in blocks_per_stage(cfg.depth)?.iter().zip(&widths).enumerate() {
            for b in 0..n {
                let name = format!("stage{}.block{}", s + 1, b + 1);
                let stride = if s > 0 && b == 0 { 2 } else { 1 };
                let conv1 = Conv::new(&mut store, &format!("{name}.conv1"), geom(cin, w, 3, stride), complex, &mut rng);
                let bn1 = BatchNorm::new(&mut store, &format!("{name}.bn1"), w, planes);
                let conv2 = Conv::new(&mut store, &format!("{name}.conv2"), geom(w, w, 3, 1), complex, &mut rng);
                let bn2 = BatchNorm::new(&mut store, &format!("{name}.bn2"), w, planes);
                let shortcut = (stride != 1 || cin != w).then(|| {
                    let conv =
                        Conv::new(&mut store, &format!("{name}.proj"), geom(cin, w, 1, stride), complex, &mut rng);
                    (conv, BatchNorm::new(&mut store, &format!("{name}.proj_bn"), w, planes))
                });
                blocks.push(Block { conv1, bn1, conv2, bn2, shortcut });
                cin = w;
            }
        }
        let head = Linear::new(&mut store, "head", planes * widths[3], cfg.num_classes, &mut rng);
        Ok(Model { config: cfg, store, stem, stem_bn, blocks, head })
    }

    /// Real trainable scalars.
    pub fn count_parameters(&self) -> usize {
        self.store.trainable_count()
    }

    /// Zeroes the affine head so every logit is zero until trained.
    pub fn zero_head(&mut self) {
        for id in [self.head.weight, self.head.bias] {
            self.store.get_mut(id).value.fill(T::zero());
        }
    }

    /// Maps a complex batch `(B, 1, D)` onto the network's input planes.
    pub fn input_map(&self, batch: &ComplexTensor<T>) -> Result<FeatureMap<T>> {
        let [_, c, len] = batch.shape();
        if c != 1 {
            return Err(Error::dim(format!("expected one complex input channel, got {c}")));
        }
        if len != self.config.input_length {
            return Err(Error::dim(format!(
                "input length {len} does not match the model's input_length {}",
                self.config.input_length
            )));
        }
        Ok(match self.config.arithmetic {
            Arithmetic::Real1ch => FeatureMap::from_real_part(batch),
            Arithmetic::Iq2ch => FeatureMap::from_iq_channels(batch),
            Arithmetic::Complex => FeatureMap::from_complex(batch),
        })
    }

    /// Records the full network on `tape` and returns the logits node.
    pub fn forward_tape(&mut self, tape: &mut Tape<T>, input: FeatureMap<T>, mode: Mode) -> Result<NodeId> {
        let store = &mut self.store;
        let x = tape.input(Value::Map(input));
        let x = self.stem.forward(tape, store, x)?;
        let x = self.stem_bn.forward(tape, store, x, mode)?;
        let x = tape.relu(x);
        let mut x = tape.max_pool(x, 3, 2, 1);
        for b in &self.blocks {
            let h = b.conv1.forward(tape, store, x)?;
            let h = b.bn1.forward(tape, store, h, mode)?;
            let h = tape.relu(h);
            let h = b.conv2.forward(tape, store, h)?;
            let h = b.bn2.forward(tape, store, h, mode)?;
            let skip = match &b.shortcut {
                Some((conv, bn)) => {
                    let s = conv.forward(tape, store, x)?;
                    bn.forward(tape, store, s, mode)?
                }
                None => x,
            };
            let sum = tape.add(h, skip)?;
            x = tape.relu(sum);
        }
        let pooled = tape.global_avg_pool(x);
        self.head.forward(tape, store, pooled)
    }

    /// Logits `(B, K)` for a complex batch `(B, 1, D)`.
    pub fn forward(&mut self, batch: &ComplexTensor<T>, mode: Mode) -> Result<Matrix<T>> {
        let input = self.input_map(batch)?;
        let mut tape = Tape::new();
        let out = self.forward_tape(&mut tape, input, mode)?;
        Ok(tape.value(out).as_matrix().clone())
    }

    pub fn summary(&self) -> ModelSummary {
        let mut layers = Vec::new();
        let mut len = self.config.input_length;
        let mut rf = 1usize;
        let mut jump = 1usize;
        let grow = |taps: usize, stride: usize, rf: &mut usize, jump: &mut usize| {
            *rf += (taps - 1) * *jump;
            *jump *= stride;
        };
        let conv_info = |c: &Conv, len: usize| LayerInfo {
            name: c.name.clone(),
            kind: format!(
                "{}conv {}x{} s{}",
                if c.is_complex() { "complex " } else { "" },
                c.geometry.taps,
                c.geometry.out_channels,
                c.geometry.stride
            ),
            output: (c.geometry.out_channels, c.geometry.out_len(len).unwrap_or(0)),
            parameters: c.parameter_count(),
        };
        let bn_info = |b: &BatchNorm, len: usize| LayerInfo {
            name: b.name.clone(),
            kind: "batchnorm".into(),
            output: (b.channels, len),
            parameters: b.parameter_count(),
        };
        layers.push(conv_info(&self.stem, len));
        len = self.stem.geometry.out_len(len).unwrap_or(0);
        grow(self.stem.geometry.taps, 2, &mut rf, &mut jump);
        layers.push(bn_info(&self.stem_bn, len));
        len = (len + 2 - 3) / 2 + 1;
        grow(3, 2, &mut rf, &mut jump);
        layers.push(LayerInfo {
            name: "stem.pool".into(),
            kind: "maxpool 3 s2".into(),
            output: (self.stem.geometry.out_channels, len),
            parameters: 0,
        });
        for b in &self.blocks {
            layers.push(conv_info(&b.conv1, len));
            grow(3, b.conv1.geometry.stride, &mut rf, &mut jump);
            len = b.conv1.geometry.out_len(len).unwrap_or(0);
            layers.push(bn_info(&b.bn1, len));
            layers.push(conv_info(&b.conv2, len));
            grow(3, 1, &mut rf, &mut jump);
            layers.push(bn_info(&b.bn2, len));
            if let Some((conv, bn)) = &b.shortcut {
                layers.push(conv_info(conv, len * conv.geometry.stride));
                layers.push(bn_info(bn, len));
            }
        }
        layers.push(LayerInfo {
            name: "pool".into(),
            kind: "global average".into(),
            output: (self.head.in_features, 1),
            parameters: 0,
        });
        layers.push(LayerInfo {
            name: self.head.name.clone(),
            kind: "linear".into(),
            output: (self.head.out_features, 1),
            parameters: self.head.parameter_count(),
        });
        ModelSummary {
            config: self.config.clone(),
            real_parameter_count: self.count_parameters(),
            layers,
            receptive_field: rf,
        }
    }

    /// Parameters plus a JSON header holding the configuration under
    /// `"model"` and any extra provenance fields.
    pub fn to_checkpoint(&self, mut header: serde_json::Value) -> Result<Checkpoint> {
        let obj = header.as_object_mut().ok_or_else(|| Error::invalid("checkpoint header must be a JSON object"))?;
        obj.insert("model".into(), serde_json::to_value(&self.config)?);
        Ok(Checkpoint::from_store(header, &self.store))
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let cfg: ModelConfig = serde_json::from_value(
            ckpt.header.get("model").cloned().ok_or_else(|| Error::Format("checkpoint header has no model".into()))?,
        )?;
        let mut model = Model::build(&cfg, 0)?;
        ckpt.apply_to(&mut model.store)?;
        Ok(model)
    }

    /// The IQ two-channel network computing exactly the same function as
    /// this complex one: every complex kernel becomes the tied real kernel
    /// `[[k_r, -k_i], [k_i, k_r]]` over `[re channels.., im channels..]`.
    pub fn tied_iq_twin(&self) -> Result<Model<T>> {
        if self.config.arithmetic != Arithmetic::Complex {
            return Err(Error::invalid("tied IQ twin needs a complex model"));
        }
        let cfg = ModelConfig {
            arithmetic: Arithmetic::Iq2ch,
            base_width: 2 * self.config.base_width,
            ..self.config.clone()
        };
        let mut twin = Model::<T>::build(&cfg, 0)?;
        let convs = |m: &Model<T>| -> Vec<Conv> {
            let mut v = vec![m.stem.clone()];
            for b in &m.blocks {
                v.push(b.conv1.clone());
                v.push(b.conv2.clone());
                if let Some((c, _)) = &b.shortcut {
                    v.push(c.clone());
                }
            }
            v
        };
        for (src, dst) in convs(self).iter().zip(convs(&twin)) {
            let (ConvWeights::Complex { re, im }, ConvWeights::Real(w)) = (src.weights, dst.weights) else {
                unreachable!("complex source, real twin")
            };
            let g = src.geometry;
            let shape = [g.out_channels, g.in_channels, g.taps];
            let k = crate::nn::ComplexKernel::new(
                Tensor3::from_vec(shape, self.store.value(re).to_vec())?,
                Tensor3::from_vec(shape, self.store.value(im).to_vec())?,
            )?;
            twin.store.get_mut(w).value.copy_from_slice(k.tied_real().data());
        }
        // Batch-norm arrays `(2, C)` and head columns already share the
        // `[re.., im..]` order; copy them by name.
        for p in self.store.iter() {
            if p.name.contains(".weight_") {
                continue;
            }
            let dst = twin
                .store
                .iter_mut()
                .find(|q| q.name == p.name)
                .ok_or_else(|| Error::invalid(format!("twin has no {}", p.name)))?;
            if dst.value.len() != p.value.len() {
                return Err(Error::dim(format!("{}: {} vs {}", p.name, dst.value.len(), p.value.len())));
            }
            dst.value.copy_from_slice(&p.value);
        }
        Ok(twin)
    }
}

/// Smallest-gap real-1ch base width for a complex configuration such that
/// the complex count does not exceed the real count. Returns the width and
/// the relative gap `(real - complex) / real`.
pub fn matched_real_width(complex: &ModelConfig) -> Result<(usize, f64)> {
    let target = complex.closed_form_parameter_count()?;
    let mut best: Option<(usize, f64)> = None;
    for w in 1..=4 * complex.base_width + 4 {
        let cfg = ModelConfig { arithmetic: Arithmetic::Real1ch, base_width: w, ..complex.clone() };
        let n = cfg.closed_form_parameter_count()?;
        if n >= target {
            let gap = (n - target) as f64 / n as f64;
            if best.is_none_or(|(_, g)| gap < g) {
                best = Some((w, gap));
            }
        }
    }
    best.ok_or_else(|| Error::invalid("no real width reaches the complex parameter budget"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(arithmetic: Arithmetic, depth: usize, width: usize) -> ModelConfig {
        ModelConfig { arithmetic, depth, base_width: width, input_length: 64, num_classes: 5, ..Default::default() }
    }

    #[test]
    fn unsupported_depth_lists_supported() {
        let err = Model::<f32>::build(&cfg(Arithmetic::Complex, 31, 4), 0).unwrap_err().to_string();
        assert!(err.contains("22") && err.contains("38"), "{err}");
    }

    #[test]
    fn runtime_count_matches_closed_form() {
        for a in Arithmetic::ALL {
            let c = cfg(a, 22, 4);
            let m = Model::<f32>::build(&c, 1).unwrap();
            assert_eq!(m.count_parameters(), c.closed_form_parameter_count().unwrap());
            assert_eq!(m.summary().layers.iter().map(|l| l.parameters).sum::<usize>(), m.count_parameters());
        }
    }

    #[test]
    fn output_shape_for_any_batch() {
        let mut m = Model::<f32>::build(&cfg(Arithmetic::Complex, 22, 2), 3).unwrap();
        for b in [1, 3] {
            let y = m.forward(&ComplexTensor::zeros([b, 1, 64]), Mode::Eval).unwrap();
            assert_eq!((y.rows, y.cols), (b, 5));
        }
        assert!(m.forward(&ComplexTensor::zeros([1, 1, 63]), Mode::Eval).is_err());
    }

    #[test]
    fn zero_head_gives_zero_logits() {
        let mut m = Model::<f32>::build(&cfg(Arithmetic::Iq2ch, 22, 2), 3).unwrap();
        m.zero_head();
        let y = m.forward(&ComplexTensor::zeros([2, 1, 64]), Mode::Eval).unwrap();
        assert!(y.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn real_model_ignores_quadrature() {
        let mut m = Model::<f32>::build(&cfg(Arithmetic::Real1ch, 22, 2), 3).unwrap();
        let n = 2 * 64;
        let x = ComplexTensor::new(
            Tensor3::from_vec([2, 1, 64], (0..n).map(|i| (i as f32 * 0.3).sin()).collect()).unwrap(),
            Tensor3::from_vec([2, 1, 64], (0..n).map(|i| (i as f32 * 0.7).cos()).collect()).unwrap(),
        )
        .unwrap();
        let a = m.forward(&x, Mode::Eval).unwrap();
        assert_eq!(a, m.forward(&x.conj(), Mode::Eval).unwrap());
        assert_eq!(a, m.forward(&x, Mode::Eval).unwrap());
    }

    #[test]
    fn stem_scales_with_width() {
        let a = Model::<f32>::build(&cfg(Arithmetic::Complex, 22, 4), 0).unwrap();
        let b = Model::<f32>::build(&cfg(Arithmetic::Complex, 22, 8), 0).unwrap();
        assert_eq!(2 * a.stem.parameter_count(), b.stem.parameter_count());
    }

    #[test]
    fn matched_width_is_within_budget() {
        let c = ModelConfig { base_width: 7, ..Default::default() };
        let (w, gap) = matched_real_width(&c).unwrap();
        assert_eq!(w, 10);
        assert!((0.0..=0.06).contains(&gap), "gap={gap}");
        // parameters grow quadratically in width, so not every complex width
        // has a real partner inside 6%
        let c = ModelConfig { base_width: 8, ..Default::default() };
        assert!(matched_real_width(&c).unwrap().1 > 0.06);
    }

    #[test]
    fn config_json_names() {
        let j = serde_json::to_value(ModelConfig::default()).unwrap();
        assert_eq!(j["arithmetic"], "complex");
        assert_eq!(j["head"], "softmax-ce");
    }
}

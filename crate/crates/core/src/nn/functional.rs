//! Stand-alone versions of the layer operations on `(batch, channels,
//! length)` tensors, for use outside a network.

use super::layers::BatchNorm;
use super::ops::{self, ConvGeometry};
use super::params::ParamStore;
use super::tape::{Mode, Tape};
use super::tensor::{ComplexTensor, FeatureMap, Tensor3, Value};
use super::Scalar;
use crate::error::{Error, Result};

/// Complex kernel `k_r + i k_i`, each part shaped `(out, in, taps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexKernel<T> {
    pub re: Tensor3<T>,
    pub im: Tensor3<T>,
}

impl<T: Scalar> ComplexKernel<T> {
    pub fn new(re: Tensor3<T>, im: Tensor3<T>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::dim(format!("kernel parts {:?} vs {:?}", re.shape(), im.shape())));
        }
        Ok(ComplexKernel { re, im })
    }

    pub fn taps(&self) -> usize {
        self.re.shape()[2]
    }

    /// Two trainable reals per complex tap.
    pub fn parameter_count(&self) -> usize {
        2 * self.re.data().len()
    }

    /// The equivalent untied real kernel `[[k_r, -k_i], [k_i, k_r]]`, shaped
    /// `(2 out, 2 in, taps)` with real channels first.
    pub fn tied_real(&self) -> Tensor3<T> {
        let [o, i, m] = self.re.shape();
        let mut w = Tensor3::zeros([2 * o, 2 * i, m]);
        for a in 0..o {
            for b in 0..i {
                for t in 0..m {
                    let (kr, ki) = (self.re.at(a, b, t), self.im.at(a, b, t));
                    *w.at_mut(a, b, t) = kr;
                    *w.at_mut(a, i + b, t) = -ki;
                    *w.at_mut(o + a, b, t) = ki;
                    *w.at_mut(o + a, i + b, t) = kr;
                }
            }
        }
        w
    }
}

fn geometry(
    kernel_shape: [usize; 3],
    in_channels: usize,
    len: usize,
    stride: usize,
    pad: usize,
) -> Result<ConvGeometry> {
    let [out, kin, taps] = kernel_shape;
    if kin != in_channels {
        return Err(Error::dim(format!(
            "kernel expects {kin} input channels (axis 1) but input has {in_channels} (axis 1)"
        )));
    }
    if stride == 0 {
        return Err(Error::invalid("stride must be at least 1"));
    }
    let g = ConvGeometry { in_channels, out_channels: out, taps, stride, pad };
    if g.out_len(len).is_none() {
        return Err(Error::dim(format!("input length {len} (axis 2) shorter than kernel width {taps}")));
    }
    Ok(g)
}

/// Complex 1D cross-correlation:
/// `y_r = x_r * k_r - x_i * k_i`, `y_i = x_r * k_i + x_i * k_r`.
pub fn complex_conv1d<T: Scalar>(
    x: &ComplexTensor<T>,
    k: &ComplexKernel<T>,
    stride: usize,
    pad: usize,
) -> Result<ComplexTensor<T>> {
    let [_, c, len] = x.shape();
    let g = geometry(k.re.shape(), c, len, stride, pad)?;
    let (yr, yi) = ops::complex_conv_forward(&x.re.swap01(), &x.im.swap01(), k.re.data(), k.im.data(), &g);
    Ok(ComplexTensor { re: yr.swap01(), im: yi.swap01() })
}

/// Real 1D cross-correlation, `x (B, C, L)`, `k (out, C, taps)`.
pub fn real_conv1d<T: Scalar>(x: &Tensor3<T>, k: &Tensor3<T>, stride: usize, pad: usize) -> Result<Tensor3<T>> {
    let [_, c, len] = x.shape();
    let g = geometry(k.shape(), c, len, stride, pad)?;
    Ok(ops::conv_forward(&x.swap01(), k.data(), &g).swap01())
}

/// Untied two-channel real convolution: I and Q enter as separate real
/// channels (`[re.., im..]`), `k4` is `(2 out, 2 in, taps)` with four free
/// reals per tap pair, and the first `out` output channels come back as the
/// real plane.
pub fn real_conv1d_2ch<T: Scalar>(
    x: &ComplexTensor<T>,
    k4: &Tensor3<T>,
    stride: usize,
    pad: usize,
) -> Result<ComplexTensor<T>> {
    let stacked = FeatureMap::from_iq_channels(x);
    let [c2, _, len] = stacked.shape();
    let g = geometry(k4.shape(), c2, len, stride, pad)?;
    if g.out_channels % 2 != 0 {
        return Err(Error::dim(format!("two-channel kernel needs an even output count, got {}", g.out_channels)));
    }
    let y = ops::conv_forward(&stacked.planes[0], k4.data(), &g);
    let [o2, b, l] = y.shape();
    let o = o2 / 2;
    let data = y.into_data();
    let half = o * b * l;
    let re = Tensor3::from_vec([o, b, l], data[..half].to_vec())?;
    let im = Tensor3::from_vec([o, b, l], data[half..].to_vec())?;
    Ok(ComplexTensor { re: re.swap01(), im: im.swap01() })
}

/// `max(0, .)` on the real and imaginary planes independently.
pub fn split_relu<T: Scalar>(x: &ComplexTensor<T>) -> ComplexTensor<T> {
    ComplexTensor { re: ops::relu_forward(&x.re), im: ops::relu_forward(&x.im) }
}

/// Split batch-norm with its own parameters and running statistics.
pub struct SplitBatchNorm<T> {
    pub store: ParamStore<T>,
    pub layer: BatchNorm,
}

impl<T: Scalar> SplitBatchNorm<T> {
    pub fn new(channels: usize) -> Self {
        let mut store = ParamStore::new();
        let layer = BatchNorm::new(&mut store, "bn", channels, 2);
        SplitBatchNorm { store, layer }
    }

    pub fn forward(&mut self, x: &ComplexTensor<T>, mode: Mode) -> Result<ComplexTensor<T>> {
        let mut tape = Tape::new();
        let input = tape.input(Value::Map(FeatureMap::from_complex(x)));
        let y = self.layer.forward(&mut tape, &mut self.store, input, mode)?;
        Ok(tape.map(y).to_complex())
    }
}

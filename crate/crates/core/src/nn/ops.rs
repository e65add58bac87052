//! Forward and backward kernels on `(channels, batch, length)` planes.
//!
//! Convolutions are cross-correlations (no kernel flip) computed as one matrix
//! product over the unfolded batch. The complex kernel applies
//! `(k_r + i k_i)(x_r + i x_i) = (k_r x_r - k_i x_i) + i (k_i x_r + k_r x_i)`
//! directly on the split planes, four real products per layer.

use super::scalar::{gemm, MatRef, Scalar};
use super::tensor::{Matrix, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub in_channels: usize,
    pub out_channels: usize,
    pub taps: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeometry {
    pub fn out_len(&self, len: usize) -> Option<usize> {
        let padded = len + 2 * self.pad;
        (padded >= self.taps && self.stride > 0).then(|| (padded - self.taps) / self.stride + 1)
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.taps
    }
}

/// Output positions `t` whose source index `t * stride + m - pad` lies in
/// `0..len`.
fn valid_range(g: &ConvGeometry, m: usize, len: usize, lout: usize) -> std::ops::Range<usize> {
    let s = g.stride;
    let lo = g.pad.saturating_sub(m).div_ceil(s);
    // largest t with t * s + m - pad <= len - 1
    let hi = if len + g.pad > m { ((len + g.pad - m - 1) / s + 1).min(lout) } else { 0 };
    lo..hi.max(lo)
}

/// Unfolds `x (Cin, B, L)` into a `(Cin*M) x (B*Lout)` row-major matrix.
fn im2col<T: Scalar>(x: &Tensor3<T>, g: &ConvGeometry, lout: usize) -> Vec<T> {
    let [cin, batch, len] = x.shape();
    let ncols = batch * lout;
    let mut cols = vec![T::zero(); cin * g.taps * ncols];
    let data = x.data();
    for c in 0..cin {
        for m in 0..g.taps {
            let row = &mut cols[(c * g.taps + m) * ncols..][..ncols];
            let r = valid_range(g, m, len, lout);
            if r.is_empty() {
                continue;
            }
            let first = r.start * g.stride + m - g.pad;
            for b in 0..batch {
                let src = &data[(c * batch + b) * len..][..len];
                let dst = &mut row[b * lout..][r.clone()];
                if g.stride == 1 {
                    dst.copy_from_slice(&src[first..first + dst.len()]);
                } else {
                    for (i, out) in dst.iter_mut().enumerate() {
                        *out = src[first + i * g.stride];
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: accumulates unfolded gradients back into `dx`.
fn col2im<T: Scalar>(cols: &[T], g: &ConvGeometry, dx: &mut Tensor3<T>, lout: usize) {
    let [cin, batch, len] = dx.shape();
    let ncols = batch * lout;
    let data = dx.data_mut();
    for c in 0..cin {
        for m in 0..g.taps {
            let row = &cols[(c * g.taps + m) * ncols..][..ncols];
            let r = valid_range(g, m, len, lout);
            if r.is_empty() {
                continue;
            }
            let first = r.start * g.stride + m - g.pad;
            for b in 0..batch {
                let dst = &mut data[(c * batch + b) * len..][..len];
                let src = &row[b * lout..][r.clone()];
                if g.stride == 1 {
                    for (d, &v) in dst[first..first + src.len()].iter_mut().zip(src) {
                        *d += v;
                    }
                } else {
                    for (i, &v) in src.iter().enumerate() {
                        dst[first + i * g.stride] += v;
                    }
                }
            }
        }
    }
}

fn check_input<T: Scalar>(x: &Tensor3<T>, g: &ConvGeometry) -> usize {
    let [cin, _, len] = x.shape();
    assert_eq!(cin, g.in_channels, "conv input channels");
    g.out_len(len).expect("input shorter than kernel")
}

pub fn conv_forward<T: Scalar>(x: &Tensor3<T>, w: &[T], g: &ConvGeometry) -> Tensor3<T> {
    let lout = check_input(x, g);
    let batch = x.shape()[1];
    let cols = im2col(x, g, lout);
    let k = g.in_channels * g.taps;
    let mut y = Tensor3::zeros([g.out_channels, batch, lout]);
    gemm(T::one(), MatRef::new(w, g.out_channels, k), MatRef::new(&cols, k, batch * lout), T::zero(), y.data_mut());
    y
}

/// Returns `(dx, dw)`.
pub fn conv_backward<T: Scalar>(x: &Tensor3<T>, w: &[T], dy: &Tensor3<T>, g: &ConvGeometry) -> (Tensor3<T>, Vec<T>) {
    let lout = check_input(x, g);
    let batch = x.shape()[1];
    let n = batch * lout;
    let k = g.in_channels * g.taps;
    let cols = im2col(x, g, lout);
    let dy_m = MatRef::new(dy.data(), g.out_channels, n);
    let mut dw = vec![T::zero(); g.weight_len()];
    gemm(T::one(), dy_m, MatRef::new(&cols, k, n).t(), T::zero(), &mut dw);
    let mut dcols = vec![T::zero(); k * n];
    gemm(T::one(), MatRef::new(w, g.out_channels, k).t(), dy_m, T::zero(), &mut dcols);
    let mut dx = Tensor3::zeros(x.shape());
    col2im(&dcols, g, &mut dx, lout);
    (dx, dw)
}

pub fn complex_conv_forward<T: Scalar>(
    xr: &Tensor3<T>,
    xi: &Tensor3<T>,
    wr: &[T],
    wi: &[T],
    g: &ConvGeometry,
) -> (Tensor3<T>, Tensor3<T>) {
    let lout = check_input(xr, g);
    let batch = xr.shape()[1];
    let n = batch * lout;
    let k = g.in_channels * g.taps;
    let cr = im2col(xr, g, lout);
    let ci = im2col(xi, g, lout);
    let (cr, ci) = (MatRef::new(&cr, k, n), MatRef::new(&ci, k, n));
    let (wr, wi) = (MatRef::new(wr, g.out_channels, k), MatRef::new(wi, g.out_channels, k));
    let mut yr = Tensor3::zeros([g.out_channels, batch, lout]);
    let mut yi = Tensor3::zeros([g.out_channels, batch, lout]);
    gemm(T::one(), wr, cr, T::zero(), yr.data_mut());
    gemm(-T::one(), wi, ci, T::one(), yr.data_mut());
    gemm(T::one(), wi, cr, T::zero(), yi.data_mut());
    gemm(T::one(), wr, ci, T::one(), yi.data_mut());
    (yr, yi)
}

pub struct ComplexConvGrads<T> {
    pub dxr: Tensor3<T>,
    pub dxi: Tensor3<T>,
    pub dwr: Vec<T>,
    pub dwi: Vec<T>,
}

pub fn complex_conv_backward<T: Scalar>(
    xr: &Tensor3<T>,
    xi: &Tensor3<T>,
    wr: &[T],
    wi: &[T],
    dyr: &Tensor3<T>,
    dyi: &Tensor3<T>,
    g: &ConvGeometry,
) -> ComplexConvGrads<T> {
    let lout = check_input(xr, g);
    let batch = xr.shape()[1];
    let n = batch * lout;
    let k = g.in_channels * g.taps;
    let cr = im2col(xr, g, lout);
    let ci = im2col(xi, g, lout);
    let (cr, ci) = (MatRef::new(&cr, k, n), MatRef::new(&ci, k, n));
    let (wr, wi) = (MatRef::new(wr, g.out_channels, k), MatRef::new(wi, g.out_channels, k));
    let (gr, gi) = (MatRef::new(dyr.data(), g.out_channels, n), MatRef::new(dyi.data(), g.out_channels, n));
    let one = T::one();

    let mut dwr = vec![T::zero(); g.weight_len()];
    let mut dwi = vec![T::zero(); g.weight_len()];
    gemm(one, gr, cr.t(), T::zero(), &mut dwr);
    gemm(one, gi, ci.t(), one, &mut dwr);
    gemm(-one, gr, ci.t(), T::zero(), &mut dwi);
    gemm(one, gi, cr.t(), one, &mut dwi);

    let mut dcr = vec![T::zero(); k * n];
    let mut dci = vec![T::zero(); k * n];
    gemm(one, wr.t(), gr, T::zero(), &mut dcr);
    gemm(one, wi.t(), gi, one, &mut dcr);
    gemm(-one, wi.t(), gr, T::zero(), &mut dci);
    gemm(one, wr.t(), gi, one, &mut dci);
    let mut dxr = Tensor3::zeros(xr.shape());
    let mut dxi = Tensor3::zeros(xi.shape());
    col2im(&dcr, g, &mut dxr, lout);
    col2im(&dci, g, &mut dxi, lout);
    ComplexConvGrads { dxr, dxi, dwr, dwi }
}

pub fn relu_forward<T: Scalar>(x: &Tensor3<T>) -> Tensor3<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Subgradient 0 at the kink; `y` is the forward output.
pub fn relu_backward<T: Scalar>(y: &Tensor3<T>, dy: &Tensor3<T>) -> Tensor3<T> {
    let mut dx = dy.clone();
    for (d, &v) in dx.data_mut().iter_mut().zip(y.data()) {
        if v <= T::zero() {
            *d = T::zero();
        }
    }
    dx
}

pub fn add_forward<T: Scalar>(a: &Tensor3<T>, b: &Tensor3<T>) -> Tensor3<T> {
    assert_eq!(a.shape(), b.shape(), "residual shapes");
    let mut y = a.clone();
    y.add_assign(b);
    y
}

/// Per-channel statistics of one plane in train mode.
pub struct BnCache<T> {
    pub xhat: Tensor3<T>,
    pub inv_std: Vec<T>,
}

/// Batch statistics per channel: `(mean, biased variance)`.
pub fn channel_stats<T: Scalar>(x: &Tensor3<T>) -> (Vec<T>, Vec<T>) {
    let [c, b, l] = x.shape();
    let n = (b * l) as f64;
    x.data()
        .chunks_exact(b * l)
        .take(c)
        .map(|ch| {
            let mean = ch.iter().map(|v| v.f64()).sum::<f64>() / n;
            let var = ch.iter().map(|v| (v.f64() - mean).powi(2)).sum::<f64>() / n;
            (T::of(mean), T::of(var))
        })
        .unzip()
}

pub fn bn_train_forward<T: Scalar>(
    x: &Tensor3<T>,
    gamma: &[T],
    beta: &[T],
    eps: f64,
) -> (Tensor3<T>, BnCache<T>, Vec<T>, Vec<T>) {
    let [c, b, l] = x.shape();
    let (mean, var) = channel_stats(x);
    let inv_std: Vec<T> = var.iter().map(|&v| T::of(1.0 / (v.f64() + eps).sqrt())).collect();
    let mut xhat = x.clone();
    let mut y = Tensor3::zeros(x.shape());
    for ch in 0..c {
        let xs = &mut xhat.data_mut()[ch * b * l..][..b * l];
        for v in xs.iter_mut() {
            *v = (*v - mean[ch]) * inv_std[ch];
        }
        let ys = &mut y.data_mut()[ch * b * l..][..b * l];
        for (o, &h) in ys.iter_mut().zip(xs.iter()) {
            *o = gamma[ch] * h + beta[ch];
        }
    }
    (y, BnCache { xhat, inv_std }, mean, var)
}

/// Returns `(dx, dgamma, dbeta)`.
pub fn bn_train_backward<T: Scalar>(cache: &BnCache<T>, gamma: &[T], dy: &Tensor3<T>) -> (Tensor3<T>, Vec<T>, Vec<T>) {
    let [c, b, l] = dy.shape();
    let n = b * l;
    let nf = T::of(n as f64);
    let mut dx = Tensor3::zeros(dy.shape());
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for ch in 0..c {
        let g = &dy.data()[ch * n..][..n];
        let h = &cache.xhat.data()[ch * n..][..n];
        let sum_g: T = g.iter().copied().sum();
        let sum_gh: T = g.iter().zip(h).map(|(&a, &b)| a * b).sum();
        dgamma[ch] = sum_gh;
        dbeta[ch] = sum_g;
        let scale = gamma[ch] * cache.inv_std[ch] / nf;
        let out = &mut dx.data_mut()[ch * n..][..n];
        for ((o, &gv), &hv) in out.iter_mut().zip(g).zip(h) {
            *o = scale * (nf * gv - sum_g - hv * sum_gh);
        }
    }
    (dx, dgamma, dbeta)
}

pub fn bn_eval_forward<T: Scalar>(
    x: &Tensor3<T>,
    gamma: &[T],
    beta: &[T],
    mean: &[T],
    var: &[T],
    eps: f64,
) -> Tensor3<T> {
    let [c, b, l] = x.shape();
    let mut y = x.clone();
    for ch in 0..c {
        let inv = T::of(1.0 / (var[ch].f64() + eps).sqrt());
        for v in y.data_mut()[ch * b * l..][..b * l].iter_mut() {
            *v = gamma[ch] * (*v - mean[ch]) * inv + beta[ch];
        }
    }
    y
}

/// Returns `(dx, dgamma, dbeta)` with the statistics held fixed.
pub fn bn_eval_backward<T: Scalar>(
    x: &Tensor3<T>,
    gamma: &[T],
    mean: &[T],
    var: &[T],
    eps: f64,
    dy: &Tensor3<T>,
) -> (Tensor3<T>, Vec<T>, Vec<T>) {
    let [c, b, l] = x.shape();
    let n = b * l;
    let mut dx = dy.clone();
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for ch in 0..c {
        let inv = T::of(1.0 / (var[ch].f64() + eps).sqrt());
        let xs = &x.data()[ch * n..][..n];
        let g = &dy.data()[ch * n..][..n];
        dbeta[ch] = g.iter().copied().sum();
        dgamma[ch] = g.iter().zip(xs).map(|(&gv, &xv)| gv * (xv - mean[ch]) * inv).sum();
        for v in dx.data_mut()[ch * n..][..n].iter_mut() {
            *v *= gamma[ch] * inv;
        }
    }
    (dx, dgamma, dbeta)
}

/// Max pool along length. Returns the output and the winning source index of
/// every output element.
pub fn maxpool_forward<T: Scalar>(x: &Tensor3<T>, size: usize, stride: usize, pad: usize) -> (Tensor3<T>, Vec<u32>) {
    let [c, b, len] = x.shape();
    assert!(len + 2 * pad >= size && pad < size, "pool window");
    let lout = (len + 2 * pad - size) / stride + 1;
    let mut y = Tensor3::zeros([c, b, lout]);
    let mut arg = vec![0u32; c * b * lout];
    for row in 0..c * b {
        let src = &x.data()[row * len..][..len];
        for t in 0..lout {
            let start = (t * stride) as isize - pad as isize;
            let lo = start.max(0) as usize;
            let hi = ((start + size as isize) as usize).min(len);
            let mut best = lo;
            for p in lo + 1..hi {
                if src[p] > src[best] {
                    best = p;
                }
            }
            y.data_mut()[row * lout + t] = src[best];
            arg[row * lout + t] = best as u32;
        }
    }
    (y, arg)
}

pub fn maxpool_backward<T: Scalar>(in_shape: [usize; 3], arg: &[u32], dy: &Tensor3<T>) -> Tensor3<T> {
    let len = in_shape[2];
    let lout = dy.shape()[2];
    let mut dx = Tensor3::zeros(in_shape);
    for (i, (&g, &a)) in dy.data().iter().zip(arg).enumerate() {
        let row = i / lout;
        dx.data_mut()[row * len + a as usize] += g;
    }
    dx
}

/// Mean over length; plane `p`, channel `c` lands in column `p * C + c`.
pub fn global_avg_pool<T: Scalar>(planes: &[Tensor3<T>]) -> Matrix<T> {
    let [c, b, l] = planes[0].shape();
    let width = planes.len() * c;
    let mut out = Matrix::zeros(b, width);
    let inv = 1.0 / l as f64;
    for (p, plane) in planes.iter().enumerate() {
        for ch in 0..c {
            for bi in 0..b {
                let s: f64 = plane.data()[(ch * b + bi) * l..][..l].iter().map(|v| v.f64()).sum();
                out.data[bi * width + p * c + ch] = T::of(s * inv);
            }
        }
    }
    out
}

pub fn global_avg_pool_backward<T: Scalar>(shape: [usize; 3], planes: usize, dy: &Matrix<T>) -> Vec<Tensor3<T>> {
    let [c, b, l] = shape;
    let inv = T::of(1.0 / l as f64);
    (0..planes)
        .map(|p| {
            let mut g = Tensor3::zeros(shape);
            for ch in 0..c {
                for bi in 0..b {
                    let v = dy.data[bi * dy.cols + p * c + ch] * inv;
                    g.data_mut()[(ch * b + bi) * l..][..l].fill(v);
                }
            }
            g
        })
        .collect()
}

/// `y = x w^T + bias` with `w` of shape `(out, in)`.
pub fn linear_forward<T: Scalar>(x: &Matrix<T>, w: &[T], bias: &[T], out: usize) -> Matrix<T> {
    let mut y = Matrix::zeros(x.rows, out);
    for r in 0..x.rows {
        y.row_mut(r).copy_from_slice(bias);
    }
    gemm(T::one(), MatRef::new(&x.data, x.rows, x.cols), MatRef::new(w, out, x.cols).t(), T::one(), &mut y.data);
    y
}

/// Returns `(dx, dw, dbias)`.
pub fn linear_backward<T: Scalar>(x: &Matrix<T>, w: &[T], dy: &Matrix<T>) -> (Matrix<T>, Vec<T>, Vec<T>) {
    let out = dy.cols;
    let mut dx = Matrix::zeros(x.rows, x.cols);
    gemm(T::one(), MatRef::new(&dy.data, dy.rows, out), MatRef::new(w, out, x.cols), T::zero(), &mut dx.data);
    let mut dw = vec![T::zero(); out * x.cols];
    gemm(T::one(), MatRef::new(&dy.data, dy.rows, out).t(), MatRef::new(&x.data, x.rows, x.cols), T::zero(), &mut dw);
    let mut db = vec![T::zero(); out];
    for r in 0..dy.rows {
        for (d, &g) in db.iter_mut().zip(dy.row(r)) {
            *d += g;
        }
    }
    (dx, dw, db)
}

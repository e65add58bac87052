//! Classification losses on `(batch, K)` logits. Both return the batch-mean
//! loss and its gradient with respect to the logits.

use super::tensor::Matrix;
use super::Scalar;
use crate::error::{Error, Result};

fn check_finite<T: Scalar>(logits: &Matrix<T>) -> Result<()> {
    if logits.data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("logits".into()))
    }
}

/// Mean over the batch of `-log softmax(z)[label]`.
pub fn cross_entropy<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> Result<(f64, Matrix<T>)> {
    check_finite(logits)?;
    if labels.len() != logits.rows {
        return Err(Error::dim(format!("{} labels for {} rows", labels.len(), logits.rows)));
    }
    let k = logits.cols;
    let inv_b = 1.0 / logits.rows as f64;
    let mut grad = Matrix::zeros(logits.rows, k);
    let mut total = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(Error::invalid(format!("label {label} outside 0..{k}")));
        }
        let z: Vec<f64> = logits.row(r).iter().map(|v| v.f64()).collect();
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        total += log_z - z[label];
        for (j, g) in grad.row_mut(r).iter_mut().enumerate() {
            let p = (z[j] - log_z).exp();
            *g = T::of((p - if j == label { 1.0 } else { 0.0 }) * inv_b);
        }
    }
    Ok((total * inv_b, grad))
}

/// Mean over all `batch * K` outputs of the logistic loss
/// `max(z, 0) - z y + log(1 + exp(-|z|))`.
pub fn binary_cross_entropy<T: Scalar>(logits: &Matrix<T>, targets: &[u8]) -> Result<(f64, Matrix<T>)> {
    check_finite(logits)?;
    if targets.len() != logits.data.len() {
        return Err(Error::dim(format!(
            "{} targets for a {}x{} logit matrix",
            targets.len(),
            logits.rows,
            logits.cols
        )));
    }
    let inv_n = 1.0 / logits.data.len() as f64;
    let mut grad = Matrix::zeros(logits.rows, logits.cols);
    let mut total = 0.0;
    for ((z, &y), g) in logits.data.iter().zip(targets).zip(grad.data.iter_mut()) {
        let z = z.f64();
        let y = y as f64;
        total += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        let sigma = if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        };
        *g = T::of((sigma - y) * inv_n);
    }
    Ok((total * inv_n, grad))
}

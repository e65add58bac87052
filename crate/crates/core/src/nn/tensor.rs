//! Dense containers.
//!
//! [`ComplexTensor`] is the public batch type, laid out `(batch, channels,
//! length)`. Inside a network, activations are [`FeatureMap`]s whose planes
//! are laid out `(channels, batch, length)` so that each channel is one
//! contiguous block; convolutions become a single matrix product over the
//! whole batch and batch-norm statistics are contiguous reductions.

use num_complex::Complex;

use super::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    shape: [usize; 3],
    data: Vec<T>,
}

impl<T: Scalar> Tensor3<T> {
    pub fn zeros(shape: [usize; 3]) -> Self {
        Tensor3 { shape, data: vec![T::zero(); shape.iter().product()] }
    }

    pub fn from_vec(shape: [usize; 3], data: Vec<T>) -> Result<Self> {
        if data.len() != shape.iter().product::<usize>() {
            return Err(Error::dim(format!(
                "shape {shape:?} needs {} elements, got {}",
                shape.iter().product::<usize>(),
                data.len()
            )));
        }
        Ok(Tensor3 { shape, data })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> T {
        self.data[(i * self.shape[1] + j) * self.shape[2] + k]
    }

    pub fn at_mut(&mut self, i: usize, j: usize, k: usize) -> &mut T {
        let [_, d1, d2] = self.shape;
        &mut self.data[(i * d1 + j) * d2 + k]
    }

    /// Swaps the first two axes.
    pub fn swap01(&self) -> Self {
        let [a, b, l] = self.shape;
        let mut out = Tensor3::zeros([b, a, l]);
        for i in 0..a {
            for j in 0..b {
                let src = (i * b + j) * l;
                let dst = (j * a + i) * l;
                out.data[dst..dst + l].copy_from_slice(&self.data[src..src + l]);
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor3 { shape: self.shape, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor3<U> {
        Tensor3 { shape: self.shape, data: self.data.iter().map(|v| U::of(v.f64())).collect() }
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Split-storage complex batch, shape `(batch, channels, length)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor<T> {
    pub re: Tensor3<T>,
    pub im: Tensor3<T>,
}

impl<T: Scalar> ComplexTensor<T> {
    pub fn new(re: Tensor3<T>, im: Tensor3<T>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::dim(format!("real plane {:?} vs imaginary plane {:?}", re.shape(), im.shape())));
        }
        Ok(ComplexTensor { re, im })
    }

    pub fn zeros(shape: [usize; 3]) -> Self {
        ComplexTensor { re: Tensor3::zeros(shape), im: Tensor3::zeros(shape) }
    }

    /// One single-channel row per sequence; all sequences must share a length.
    pub fn from_rows<S: Copy + Into<f64>>(rows: &[Vec<Complex<S>>]) -> Result<Self> {
        let len = rows.first().map_or(0, Vec::len);
        let mut out = ComplexTensor::zeros([rows.len(), 1, len]);
        for (b, row) in rows.iter().enumerate() {
            if row.len() != len {
                return Err(Error::dim(format!("row {b} has length {}, expected {len}", row.len())));
            }
            for (t, v) in row.iter().enumerate() {
                *out.re.at_mut(b, 0, t) = T::of(v.re.into());
                *out.im.at_mut(b, 0, t) = T::of(v.im.into());
            }
        }
        Ok(out)
    }

    pub fn shape(&self) -> [usize; 3] {
        self.re.shape()
    }

    pub fn conj(&self) -> Self {
        ComplexTensor { re: self.re.clone(), im: self.im.map(|v| -v) }
    }

    pub fn cast<U: Scalar>(&self) -> ComplexTensor<U> {
        ComplexTensor { re: self.re.cast(), im: self.im.cast() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!("{rows}x{cols} matrix from {} values", data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Activation planes laid out `(channels, batch, length)`: one plane for real
/// arithmetic, two (real, imaginary) for complex.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T> {
    pub planes: Vec<Tensor3<T>>,
}

impl<T: Scalar> FeatureMap<T> {
    pub fn real(plane: Tensor3<T>) -> Self {
        FeatureMap { planes: vec![plane] }
    }

    pub fn complex(re: Tensor3<T>, im: Tensor3<T>) -> Self {
        FeatureMap { planes: vec![re, im] }
    }

    pub fn is_complex(&self) -> bool {
        self.planes.len() == 2
    }

    /// `(channels, batch, length)` of each plane.
    pub fn shape(&self) -> [usize; 3] {
        self.planes[0].shape()
    }

    pub fn zeros_like(&self) -> Self {
        FeatureMap { planes: self.planes.iter().map(|p| Tensor3::zeros(p.shape())).collect() }
    }

    /// Complex batch `(B, C, L)` to complex feature map `(C, B, L)`.
    pub fn from_complex(x: &ComplexTensor<T>) -> Self {
        FeatureMap::complex(x.re.swap01(), x.im.swap01())
    }

    /// Real part only, `(B, C, L)` to `(C, B, L)`.
    pub fn from_real_part(x: &ComplexTensor<T>) -> Self {
        FeatureMap::real(x.re.swap01())
    }

    /// I and Q as separate real channels: `[re channels.., im channels..]`.
    pub fn from_iq_channels(x: &ComplexTensor<T>) -> Self {
        let re = x.re.swap01();
        let im = x.im.swap01();
        let [c, b, l] = re.shape();
        let mut data = re.into_data();
        data.extend_from_slice(im.data());
        FeatureMap::real(Tensor3::from_vec([2 * c, b, l], data).expect("stacked planes"))
    }

    /// Back to a complex batch `(B, C, L)`; a real map gets a zero imaginary plane.
    pub fn to_complex(&self) -> ComplexTensor<T> {
        let re = self.planes[0].swap01();
        let im = match self.planes.get(1) {
            Some(p) => p.swap01(),
            None => Tensor3::zeros(re.shape()),
        };
        ComplexTensor { re, im }
    }
}

/// Anything a tape node can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Value<T> {
    Map(FeatureMap<T>),
    Matrix(Matrix<T>),
}

impl<T: Scalar> Value<T> {
    pub fn as_map(&self) -> &FeatureMap<T> {
        match self {
            Value::Map(m) => m,
            Value::Matrix(_) => panic!("expected a feature map, found a matrix"),
        }
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        match self {
            Value::Matrix(m) => m,
            Value::Map(_) => panic!("expected a matrix, found a feature map"),
        }
    }

    pub fn zeros_like(&self) -> Self {
        match self {
            Value::Map(m) => Value::Map(m.zeros_like()),
            Value::Matrix(m) => Value::Matrix(Matrix::zeros(m.rows, m.cols)),
        }
    }

    pub fn data_slices(&self) -> Vec<&[T]> {
        match self {
            Value::Map(m) => m.planes.iter().map(|p| p.data()).collect(),
            Value::Matrix(m) => vec![&m.data],
        }
    }

    pub fn data_slices_mut(&mut self) -> Vec<&mut [T]> {
        match self {
            Value::Map(m) => m.planes.iter_mut().map(|p| p.data_mut()).collect(),
            Value::Matrix(m) => vec![&mut m.data],
        }
    }

    pub fn len(&self) -> usize {
        self.data_slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.data_slices_mut().into_iter().zip(other.data_slices()) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

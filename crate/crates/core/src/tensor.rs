//! Dense d-dimensional tensors (1 ≤ d ≤ 3) and the mode products used to
//! move between nodal and modal coordinates.
//!
//! Storage is row-major: the last axis is contiguous. Every operation here is
//! pure and allocates its output.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{EifeError, Result};

/// Number of axis-lines handed to a line kernel at once.
pub(crate) const LINE_BLOCK: usize = 32;

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorD {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TensorD {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_shape(&shape)?;
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(EifeError::Shape {
                expected: shape,
                found: vec![data.len()],
            });
        }
        Ok(TensorD { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        assert!(check_shape(shape).is_ok(), "invalid tensor shape {shape:?}");
        let len = shape.iter().product();
        TensorD {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    /// Builds a tensor by evaluating `f` at every multi-index, row-major.
    pub fn from_fn<F>(shape: &[usize], mut f: F) -> Self
    where
        F: FnMut(&[usize]) -> f64,
    {
        let mut t = Self::zeros(shape);
        let mut idx = vec![0usize; shape.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            increment(&mut idx, shape);
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn flat_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len() || index.iter().zip(&self.shape).any(|(i, n)| i >= n) {
            return Err(EifeError::Bounds {
                index: index.to_vec(),
                shape: self.shape.clone(),
            });
        }
        Ok(index.iter().zip(self.strides()).map(|(i, s)| i * s).sum())
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.flat_index(index)?])
    }

    pub fn map<F>(&self, f: F) -> TensorD
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        TensorD {
            shape: self.shape.clone(),
            data: self.data.par_iter().map(|&v| f(v)).collect(),
        }
    }

    /// Entrywise combination of two equally shaped tensors.
    pub fn zip_map<F>(&self, other: &TensorD, f: F) -> Result<TensorD>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        self.require_shape(other.shape())?;
        Ok(TensorD {
            shape: self.shape.clone(),
            data: self
                .data
                .par_iter()
                .zip(other.data.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, alpha: f64) -> TensorD {
        self.map(|v| alpha * v)
    }

    /// `alpha * self + beta * other`
    pub fn lincomb(&self, alpha: f64, other: &TensorD, beta: f64) -> Result<TensorD> {
        self.zip_map(other, |a, b| alpha * a + beta * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn require_shape(&self, shape: &[usize]) -> Result<()> {
        if self.shape != shape {
            return Err(EifeError::shape(shape, &self.shape));
        }
        Ok(())
    }

    /// Applies `kernel` to every line along `axis`.
    ///
    /// The kernel receives a buffer holding `count` lines of length
    /// `shape[axis]` back to back and rewrites them in place. Lines are grouped
    /// into blocks of `LINE_BLOCK` by a fixed rule, so results do not depend on
    /// the number of worker threads.
    pub(crate) fn apply_along_axis<K>(&self, axis: usize, kernel: K) -> TensorD
    where
        K: Fn(&mut [f64], usize) + Sync,
    {
        assert!(axis < self.ndim());
        let n = self.shape[axis];
        let stride: usize = self.shape[axis + 1..].iter().product();
        let mut out = self.data.clone();

        if stride == 1 {
            out.par_chunks_mut(n * LINE_BLOCK).for_each(|chunk| {
                let count = chunk.len() / n;
                kernel(chunk, count);
            });
        } else {
            let slab = n * stride;
            out.par_chunks_mut(slab).for_each(|slice| {
                let blocks: Vec<(usize, Vec<f64>)> = (0..stride)
                    .step_by(LINE_BLOCK)
                    .collect::<Vec<_>>()
                    .into_par_iter()
                    .map(|i0| {
                        let count = LINE_BLOCK.min(stride - i0);
                        let mut buf = vec![0.0; count * n];
                        for j in 0..n {
                            let row = &slice[j * stride + i0..j * stride + i0 + count];
                            for (l, &v) in row.iter().enumerate() {
                                buf[l * n + j] = v;
                            }
                        }
                        kernel(&mut buf, count);
                        (i0, buf)
                    })
                    .collect();
                for (i0, buf) in blocks {
                    let count = buf.len() / n;
                    for j in 0..n {
                        let row = &mut slice[j * stride + i0..j * stride + i0 + count];
                        for (l, v) in row.iter_mut().enumerate() {
                            *v = buf[l * n + j];
                        }
                    }
                }
            });
        }
        TensorD {
            shape: self.shape.clone(),
            data: out,
        }
    }
}

pub(crate) fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.len() > MAX_DIM || shape.contains(&0) {
        return Err(EifeError::Config(format!(
            "tensor shape must have 1..={MAX_DIM} positive extents, got {shape:?}"
        )));
    }
    Ok(())
}

/// Row-major strides of `shape`.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * shape[a + 1];
    }
    s
}

/// Row-major successor of a multi-index; wraps to all zeros after the last.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for a in (0..idx.len()).rev() {
        idx[a] += 1;
        if idx[a] < shape[a] {
            return;
        }
        idx[a] = 0;
    }
}

pub(crate) fn unravel(mut flat: usize, shape: &[usize], idx: &mut [usize]) {
    for a in (0..shape.len()).rev() {
        idx[a] = flat % shape[a];
        flat /= shape[a];
    }
}

/// `(M ⊗_axis U)`: replaces every line of `u` along `axis` by `m` applied to it.
pub fn mode_multiply(m: &DMatrix<f64>, u: &TensorD, axis: usize) -> Result<TensorD> {
    if axis >= u.ndim() {
        return Err(EifeError::Bounds {
            index: vec![axis],
            shape: u.shape().to_vec(),
        });
    }
    let n = u.shape()[axis];
    if m.nrows() != n || m.ncols() != n {
        return Err(EifeError::shape(&[n, n], &[m.nrows(), m.ncols()]));
    }
    Ok(u.apply_along_axis(axis, |buf, count| {
        let mut tmp = vec![0.0; n];
        for line in buf.chunks_mut(n).take(count) {
            for (i, t) in tmp.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (r, &x) in line.iter().enumerate() {
                    acc += m[(i, r)] * x;
                }
                *t = acc;
            }
            line.copy_from_slice(&tmp);
        }
    }))
}

pub fn hadamard(a: &TensorD, b: &TensorD) -> Result<TensorD> {
    a.zip_map(b, |x, y| x * y)
}

pub fn exp_entrywise(a: &TensorD) -> TensorD {
    a.map(f64::exp)
}

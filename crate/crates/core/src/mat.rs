//! Dense column-major matrix, just large enough for this crate.
//!
//! Column-major layout keeps every dictionary atom contiguous, which is what
//! both the on-disk dictionary format and the sparse column-accumulation
//! kernels want.

use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Builds a matrix by evaluating `f(row, col)` for every entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    /// Wraps an existing column-major buffer.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch {
                context: "column-major buffer length",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[c * self.rows + r] = v;
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[T] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self^T * x`: one contiguous dot product per column.
    pub fn transpose_dot(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.rows {
            return Err(Error::DimMismatch {
                context: "matrix^T * vector",
                expected: self.rows,
                actual: x.len(),
            });
        }
        let mut out = Vec::with_capacity(self.cols);
        for c in 0..self.cols {
            let col = self.col(c);
            let mut acc = T::zero();
            for (a, b) in col.iter().zip(x) {
                acc = acc + *a * *b;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// `self * v`, accumulating columns and skipping zero coefficients.
    pub fn dot(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::DimMismatch {
                context: "matrix * vector",
                expected: self.cols,
                actual: v.len(),
            });
        }
        let mut out = vec![T::zero(); self.rows];
        for (c, &coef) in v.iter().enumerate() {
            if coef != T::zero() {
                for (o, &w) in out.iter_mut().zip(self.col(c)) {
                    *o = *o + coef * w;
                }
            }
        }
        Ok(out)
    }

    /// `self * entries` where `entries` is a sparse vector of `(index, value)`.
    pub fn dot_sparse(&self, entries: &[(usize, T)]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.rows];
        for &(c, coef) in entries {
            if c >= self.cols {
                return Err(Error::SpikeIndexOutOfRange {
                    index: c,
                    input_dim: self.cols,
                });
            }
            for (o, &w) in out.iter_mut().zip(self.col(c)) {
                *o = *o + coef * w;
            }
        }
        Ok(out)
    }

    /// `self^T * self`, filled symmetrically.
    pub fn gram(&self) -> Mat<T> {
        let n = self.cols;
        let mut g = Mat::zeros(n, n);
        for i in 0..n {
            let ci = self.col(i);
            for j in i..n {
                let cj = self.col(j);
                let mut acc = T::zero();
                for (a, b) in ci.iter().zip(cj) {
                    acc = acc + *a * *b;
                }
                g.set(i, j, acc);
                g.set(j, i, acc);
            }
        }
        g
    }

    /// Column-major transpose copy.
    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn scale(&self, s: T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }
}

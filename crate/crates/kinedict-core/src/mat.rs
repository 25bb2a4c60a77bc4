//! A minimal column-major matrix of `f64`.
//!
//! Dictionaries (`d x N`, one atom per column), code batches (`N x b`, one
//! sample per column), and the learner's history matrices are all small and
//! dense; a flat `Vec` with explicit indexing keeps the numerics transparent
//! and the dependency surface empty.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from a column-major buffer.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "Mat::from_col_major",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    /// Build from a list of equal-length columns.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for col in columns {
            if col.len() != rows {
                return Err(Error::DimensionMismatch {
                    context: "Mat::from_columns",
                    expected: rows,
                    got: col.len(),
                });
            }
            data.extend_from_slice(col);
        }
        Ok(Mat { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[c * self.rows + r] = v;
    }

    /// Column `c` as a slice.
    #[inline]
    pub fn col(&self, c: usize) -> &[f64] {
        debug_assert!(c < self.cols);
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Column `c` as a mutable slice.
    #[inline]
    pub fn col_mut(&mut self, c: usize) -> &mut [f64] {
        debug_assert!(c < self.cols);
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// The underlying column-major buffer.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self * v` for a vector `v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "Mat::matvec",
                expected: self.cols,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (c, &vc) in v.iter().enumerate() {
            if vc == 0.0 {
                continue; // skipping exact zeros keeps one-hot products exact
            }
            let col = self.col(c);
            for (o, &x) in out.iter_mut().zip(col) {
                *o += x * vc;
            }
        }
        Ok(out)
    }

    /// `self^T * v` for a vector `v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "Mat::tr_matvec",
                expected: self.rows,
                got: v.len(),
            });
        }
        Ok((0..self.cols)
            .map(|c| crate::math::dot(self.col(c), v))
            .collect())
    }

    /// `self += alpha * a * b^T` (rank-one update).
    pub fn add_outer(&mut self, alpha: f64, a: &[f64], b: &[f64]) -> Result<()> {
        if a.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "Mat::add_outer (left)",
                expected: self.rows,
                got: a.len(),
            });
        }
        if b.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "Mat::add_outer (right)",
                expected: self.cols,
                got: b.len(),
            });
        }
        for (c, &bc) in b.iter().enumerate() {
            if bc == 0.0 {
                continue;
            }
            let col = self.col_mut(c);
            for (x, &ac) in col.iter_mut().zip(a) {
                *x += alpha * ac * bc;
            }
        }
        Ok(())
    }

    /// Scale every entry in place.
    pub fn scale(&mut self, alpha: f64) {
        for x in &mut self.data {
            *x *= alpha;
        }
    }

    /// Squared Frobenius norm of `self - other`.
    pub fn sq_frobenius_diff(&self, other: &Mat) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "Mat::sq_frobenius_diff",
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }
}

//! Dense row-major matrices and the handful of products the layers need.

use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Mat::from_vec",
                format!("{rows}x{cols}"),
                format!("{} values", data.len()),
            ));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn row_vector(data: &[f64]) -> Self {
        Mat {
            rows: 1,
            cols: data.len(),
            data: data.to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn add_assign(&mut self, other: &Mat) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Columns `start..start + width` as a new matrix.
    pub fn cols_slice(&self, start: usize, width: usize) -> Mat {
        let mut out = Mat::zeros(self.rows, width);
        for r in 0..self.rows {
            out.row_mut(r).copy_from_slice(&self.row(r)[start..start + width]);
        }
        out
    }

    /// Write `src` into columns starting at `start`.
    pub fn set_cols(&mut self, start: usize, src: &Mat) {
        for r in 0..self.rows {
            let w = src.cols;
            self.row_mut(r)[start..start + w].copy_from_slice(src.row(r));
        }
    }

    /// Accumulate `src` into columns starting at `start`.
    pub fn add_cols(&mut self, start: usize, src: &Mat) {
        for r in 0..self.rows {
            let dst = &mut self.data[r * self.cols + start..r * self.cols + start + src.cols];
            for (d, s) in dst.iter_mut().zip(src.row(r)) {
                *d += s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// `a (n×k) · b (k×m)` where `b` is a raw row-major slice.
pub fn matmul(a: &Mat, b: &[f64], m: usize) -> Mat {
    let k = a.cols;
    debug_assert_eq!(b.len(), k * m);
    let mut out = Mat::zeros(a.rows, m);
    for i in 0..a.rows {
        let ar = a.row(i);
        let or = &mut out.data[i * m..(i + 1) * m];
        for (p, &av) in ar.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let br = &b[p * m..(p + 1) * m];
            for (o, &bv) in or.iter_mut().zip(br) {
                *o += av * bv;
            }
        }
    }
    out
}

/// `a (n×m) · bᵀ` where `b` is `k×m` row-major; result `n×k`.
pub fn matmul_bt(a: &Mat, b: &[f64], k: usize) -> Mat {
    let m = a.cols;
    debug_assert_eq!(b.len(), k * m);
    let mut out = Mat::zeros(a.rows, k);
    for i in 0..a.rows {
        let ar = a.row(i);
        for p in 0..k {
            let br = &b[p * m..(p + 1) * m];
            out.data[i * k + p] = ar.iter().zip(br).map(|(x, y)| x * y).sum();
        }
    }
    out
}

/// `acc += aᵀ (k×n) · b (n×m)`, with `acc` a raw `k×m` slice.
pub fn acc_at_b(acc: &mut [f64], a: &Mat, b: &Mat) {
    let (k, m) = (a.cols, b.cols);
    debug_assert_eq!(a.rows, b.rows);
    debug_assert_eq!(acc.len(), k * m);
    for r in 0..a.rows {
        let ar = a.row(r);
        let br = b.row(r);
        for (p, &av) in ar.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let dst = &mut acc[p * m..(p + 1) * m];
            for (d, &bv) in dst.iter_mut().zip(br) {
                *d += av * bv;
            }
        }
    }
}

/// `a · bᵀ` for two owned matrices with equal column counts.
pub fn mat_mul_t(a: &Mat, b: &Mat) -> Mat {
    matmul_bt(a, &b.data, b.rows)
}

/// `a · b` for two owned matrices.
pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    matmul(a, &b.data, b.cols)
}

/// `aᵀ · b` for two owned matrices with equal row counts.
pub fn mat_t_mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = Mat::zeros(a.cols, b.cols);
    acc_at_b(&mut out.data, a, b);
    out
}

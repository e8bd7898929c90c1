//! Dense 64-bit float vectors and row-major matrices with the forward and
//! backward kernels for the fixed operator set (affine, relu, matmul).
//!
//! Everything here is a pure function of its inputs; values are immutable
//! once built and safe to share read-only across threads.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector {
            data: vec![0.0; len],
        }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Vector { data: v.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector {
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        debug_assert!(rows.iter().all(|r| r.len() == ncols));
        Matrix {
            rows: rows.len(),
            cols: ncols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vector(&self, r: usize) -> Vector {
        Vector::from_slice(self.row(r))
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// C = A * B. The k-in-the-middle loop order keeps both the A row and
    /// the B row accesses sequential, which autovectorizes well.
    pub fn matmul(&self, b: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, b.rows,
            "matmul: lhs is {}x{}, rhs is {}x{}",
            self.rows, self.cols, b.rows, b.cols
        );
        let mut c = Matrix::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let c_row = c.row_mut(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let b_row = b.row(k);
                for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                    *cv += aik * bv;
                }
            }
        }
        c
    }

    /// C = A * B^T.
    pub fn matmul_nt(&self, b: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, b.cols,
            "matmul_nt: lhs is {}x{}, rhs^T is {}x{}",
            self.rows, self.cols, b.cols, b.rows
        );
        let mut c = Matrix::zeros(self.rows, b.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let c_row = c.row_mut(i);
            for (j, cv) in c_row.iter_mut().enumerate() {
                let b_row = b.row(j);
                let mut acc = 0.0;
                for (av, bv) in a_row.iter().zip(b_row) {
                    acc += av * bv;
                }
                *cv = acc;
            }
        }
        c
    }

    /// C = A^T * B.
    pub fn matmul_tn(&self, b: &Matrix) -> Matrix {
        assert_eq!(
            self.rows, b.rows,
            "matmul_tn: lhs^T is {}x{}, rhs is {}x{}",
            self.cols, self.rows, b.rows, b.cols
        );
        let mut c = Matrix::zeros(self.cols, b.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = b.row(k);
            for (i, &aki) in a_row.iter().enumerate() {
                if aki == 0.0 {
                    continue;
                }
                let c_row = c.row_mut(i);
                for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                    *cv += aki * bv;
                }
            }
        }
        c
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Column-wise sum, as a length-`cols` vector.
    pub fn col_sum(&self) -> Vector {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        Vector { data: out }
    }
}

/// Wx + b.
pub fn affine_forward(w: &Matrix, b: &Vector, x: &Vector) -> Result<Vector> {
    if w.cols != x.len() || b.len() != w.rows {
        return Err(Error::shape(
            "affine_forward",
            format!(
                "W is {}x{}, b has length {}, x has length {}",
                w.rows,
                w.cols,
                b.len(),
                x.len()
            ),
        ));
    }
    let mut out = b.data.clone();
    for (r, o) in out.iter_mut().enumerate() {
        let row = w.row(r);
        let mut acc = 0.0;
        for (wv, xv) in row.iter().zip(&x.data) {
            acc += wv * xv;
        }
        *o += acc;
    }
    Ok(Vector { data: out })
}

/// Gradients of Wx + b given the upstream gradient:
/// grad_W = grad_out ⊗ x, grad_b = grad_out, grad_x = W^T grad_out.
pub fn affine_backward(
    w: &Matrix,
    x: &Vector,
    grad_out: &Vector,
) -> Result<(Matrix, Vector, Vector)> {
    if w.cols != x.len() || grad_out.len() != w.rows {
        return Err(Error::shape(
            "affine_backward",
            format!(
                "W is {}x{}, x has length {}, grad_out has length {}",
                w.rows,
                w.cols,
                x.len(),
                grad_out.len()
            ),
        ));
    }
    let mut grad_w = Matrix::zeros(w.rows, w.cols);
    for r in 0..w.rows {
        let g = grad_out.data[r];
        for (c, xv) in x.data.iter().enumerate() {
            grad_w.data[r * w.cols + c] = g * xv;
        }
    }
    let grad_b = grad_out.clone();
    let mut grad_x = vec![0.0; w.cols];
    for r in 0..w.rows {
        let g = grad_out.data[r];
        for (gx, wv) in grad_x.iter_mut().zip(w.row(r)) {
            *gx += g * wv;
        }
    }
    Ok((grad_w, grad_b, Vector { data: grad_x }))
}

/// Elementwise max(x, 0).
pub fn relu(x: &Vector) -> Vector {
    Vector {
        data: x.data.iter().map(|v| v.max(0.0)).collect(),
    }
}

/// Passes grad_out where x > 0, zero elsewhere. The subgradient at exactly
/// zero is defined as 0.
pub fn relu_backward(x: &Vector, grad_out: &Vector) -> Vector {
    debug_assert_eq!(x.len(), grad_out.len());
    Vector {
        data: x
            .data
            .iter()
            .zip(&grad_out.data)
            .map(|(&xv, &g)| if xv > 0.0 { g } else { 0.0 })
            .collect(),
    }
}

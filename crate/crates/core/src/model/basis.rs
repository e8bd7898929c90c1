//! Fixed basis matrices: polynomial trend and harmonic seasonality.
//!
//! Both are built on a uniform grid t = [0, 1, ..., len-1] / len. The
//! forecast side uses the horizon grid; the backcast side uses its own grid
//! of `backcast_len` points with the same functional form.

use crate::error::{Error, Result};
use crate::model::config::fourier_dim;
use crate::tensor::Matrix;
use std::f64::consts::PI;

fn trend_matrix(len: usize, degree: usize) -> Matrix {
    let mut m = Matrix::zeros(len, degree + 1);
    for i in 0..len {
        let t = i as f64 / len as f64;
        let mut pow = 1.0;
        for j in 0..=degree {
            m.data[i * (degree + 1) + j] = pow;
            pow *= t;
        }
    }
    m
}

/// Polynomial bases of degree `p`: (T_back, T_fwd). Row i of T_fwd is
/// [1, (i/H), (i/H)^2, ..., (i/H)^p].
pub fn make_trend_basis(backcast_len: usize, horizon: usize, p: usize) -> (Matrix, Matrix) {
    (trend_matrix(backcast_len, p), trend_matrix(horizon, p))
}

fn fourier_matrix(len: usize) -> Matrix {
    let harmonics = (len / 2).saturating_sub(1);
    let cols = fourier_dim(len);
    let mut m = Matrix::zeros(len, cols);
    for i in 0..len {
        let t = i as f64 / len as f64;
        let row = m.row_mut(i);
        row[0] = 1.0;
        for k in 1..=harmonics {
            let angle = 2.0 * PI * k as f64 * t;
            row[k] = angle.cos();
            row[harmonics + k] = angle.sin();
        }
    }
    m
}

/// Harmonic bases: (S_back, S_fwd). Columns are a leading constant followed
/// by cos(2*pi*k*t) then sin(2*pi*k*t) for k = 1..floor(len/2 - 1); the
/// identically-zero sin(0*t) column is omitted.
pub fn make_fourier_basis(backcast_len: usize, horizon: usize) -> Result<(Matrix, Matrix)> {
    if horizon < 2 {
        return Err(Error::invalid(
            "make_fourier_basis",
            format!("horizon must be >= 2, got {horizon}"),
        ));
    }
    Ok((fourier_matrix(backcast_len), fourier_matrix(horizon)))
}

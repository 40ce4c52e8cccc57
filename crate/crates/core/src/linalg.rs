//! Small dense square matrices stored row-major.
//!
//! Dimensions in this crate are single digits, so everything here is plain
//! loops over `&[f64]` with caller-provided output buffers. Nothing in the
//! stepping hot path allocates.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        transpose_into(&self.data, &mut out.data, self.dim);
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros(self.dim);
        matmul_into(&self.data, &rhs.data, &mut out.data, self.dim);
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

pub fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[i * n + k] * b[k * n + j];
            }
            out[i * n + j] = s;
        }
    }
}

/// `out = aᵀ b`
pub fn matmul_tn_into(a: &[f64], b: &[f64], out: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[k * n + i] * b[k * n + j];
            }
            out[i * n + j] = s;
        }
    }
}

pub fn transpose_into(a: &[f64], out: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j];
        }
    }
}

/// Frobenius norm of `M Mᵀ - I`.
pub fn orthogonality_residual(m: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut dot = 0.0;
            for k in 0..n {
                dot += m[i * n + k] * m[j * n + k];
            }
            let e = dot - if i == j { 1.0 } else { 0.0 };
            s += e * e;
        }
    }
    s.sqrt()
}

/// Solves `lhs · X = rhs` in place (`rhs` becomes `X`) by Gaussian
/// elimination with partial pivoting. `lhs` is destroyed. Returns the
/// smallest absolute pivot encountered.
pub fn solve_in_place(lhs: &mut [f64], rhs: &mut [f64], n: usize) -> std::result::Result<f64, f64> {
    let scale = lhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if lhs[r * n + col].abs() > lhs[piv * n + col].abs() {
                piv = r;
            }
        }
        let p = lhs[piv * n + col];
        min_pivot = min_pivot.min(p.abs());
        if !(p.abs() > 1e-13 * scale) {
            return Err(p.abs());
        }
        if piv != col {
            for j in 0..n {
                lhs.swap(col * n + j, piv * n + j);
                rhs.swap(col * n + j, piv * n + j);
            }
        }
        for r in col + 1..n {
            let f = lhs[r * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                lhs[r * n + j] -= f * lhs[col * n + j];
            }
            for j in 0..n {
                rhs[r * n + j] -= f * rhs[col * n + j];
            }
        }
    }
    for col in (0..n).rev() {
        let p = lhs[col * n + col];
        for j in 0..n {
            let mut s = rhs[col * n + j];
            for k in col + 1..n {
                s -= lhs[col * n + k] * rhs[k * n + j];
            }
            rhs[col * n + j] = s / p;
        }
    }
    Ok(min_pivot)
}

/// Thin QR factorization `m = q · r` with `r` upper triangular and a
/// strictly positive diagonal, via modified Gram–Schmidt with one
/// re-orthogonalization pass. `m` is overwritten by `q`; `r` receives the
/// triangular factor.
pub fn qr_in_place(m: &mut [f64], r: &mut [f64], n: usize) -> Result<()> {
    r.iter_mut().for_each(|v| *v = 0.0);
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for j in 0..n {
        for _pass in 0..2 {
            for i in 0..j {
                let mut dot = 0.0;
                for k in 0..n {
                    dot += m[k * n + i] * m[k * n + j];
                }
                r[i * n + j] += dot;
                for k in 0..n {
                    m[k * n + j] -= dot * m[k * n + i];
                }
            }
        }
        let norm = (0..n).map(|k| m[k * n + j] * m[k * n + j]).sum::<f64>().sqrt();
        if !(norm > 1e-12 * scale) || !norm.is_finite() {
            return Err(Error::RankDeficient { column: j, norm });
        }
        r[j * n + j] = norm;
        for k in 0..n {
            m[k * n + j] /= norm;
        }
    }
    Ok(())
}

/// Cayley transform `(I - B/2)⁻¹ (I + B/2)` written into `out`, using
/// `scratch` (length `n²`) as workspace.
pub fn cayley_into(b: &[f64], out: &mut [f64], scratch: &mut [f64], n: usize) -> std::result::Result<(), f64> {
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            scratch[i * n + j] = delta - 0.5 * b[i * n + j];
            out[i * n + j] = delta + 0.5 * b[i * n + j];
        }
    }
    solve_in_place(scratch, out, n).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_reproduces_input_with_positive_diagonal() {
        let n = 3;
        let a = [2.0, -1.0, 0.5, 0.3, 4.0, 1.0, -1.0, 0.2, 3.0];
        let mut q = a;
        let mut r = [0.0; 9];
        qr_in_place(&mut q, &mut r, n).unwrap();
        let mut back = [0.0; 9];
        matmul_into(&q, &r, &mut back, n);
        for (x, y) in back.iter().zip(&a) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!(orthogonality_residual(&q, n) < 1e-15);
        for i in 0..n {
            assert!(r[i * n + i] > 0.0);
            for j in 0..i {
                assert_eq!(r[i * n + j], 0.0);
            }
        }
    }

    #[test]
    fn qr_rejects_rank_deficient() {
        let mut m = [1.0, 2.0, 2.0, 4.0];
        let mut r = [0.0; 4];
        assert!(matches!(qr_in_place(&mut m, &mut r, 2), Err(Error::RankDeficient { column: 1, .. })));
    }

    #[test]
    fn solve_matches_known_inverse() {
        let mut lhs = [4.0, 7.0, 2.0, 6.0];
        let mut rhs = [1.0, 0.0, 0.0, 1.0];
        solve_in_place(&mut lhs, &mut rhs, 2).unwrap();
        let expected = [0.6, -0.7, -0.2, 0.4];
        for (x, y) in rhs.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-15);
        }
        let mut singular = [1.0, 2.0, 2.0, 4.0];
        let mut rhs = [1.0, 0.0, 0.0, 1.0];
        assert!(solve_in_place(&mut singular, &mut rhs, 2).is_err());
    }

    #[test]
    fn cayley_of_antisymmetric_is_orthogonal() {
        let b = [0.0, 0.3, -0.1, -0.3, 0.0, 0.7, 0.1, -0.7, 0.0];
        let mut out = [0.0; 9];
        let mut scratch = [0.0; 9];
        cayley_into(&b, &mut out, &mut scratch, 3).unwrap();
        assert!(orthogonality_residual(&out, 3) < 1e-15);
    }
}

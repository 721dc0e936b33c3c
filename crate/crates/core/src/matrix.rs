//! Small dense square matrices for transition matrices and their inverses.

use crate::error::{numeric, structural, Result};
use crate::scalar::Scalar;

/// Row-major `n × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(structural!("matrix must have at least one row"));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(structural!("row {i} has {} entries, expected {n}", row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks_exact(self.n)
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(structural!("cannot multiply {0}x{0} by {1}x{1}", self.n, other.n));
        }
        let n = self.n;
        Ok(Self::from_fn(n, |i, j| {
            (0..n).fold(S::zero(), |acc, l| acc + self.get(i, l) * other.get(l, j))
        }))
    }

    pub fn mul_vec(&self, v: &[S]) -> Result<Vec<S>> {
        if v.len() != self.n {
            return Err(structural!("vector length {} does not match matrix dimension {}", v.len(), self.n));
        }
        Ok(self
            .rows()
            .map(|row| row.iter().zip(v).fold(S::zero(), |acc, (a, b)| acc + *a * *b))
            .collect())
    }

    /// Largest elementwise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.data
            .iter()
            .zip(&other.data)
            .fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    /// Determinant and inverse by Gauss-Jordan elimination with partial pivoting.
    ///
    /// Fails when `|det| <= min_abs_det`.
    pub fn inverse_with_det(&self, min_abs_det: S) -> Result<(Self, S)> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        let mut det = S::one();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| {
                    a[r * n + col]
                        .abs()
                        .partial_cmp(&a[s * n + col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("non-empty pivot range");
            let p = a[pivot * n + col];
            if p == S::zero() || !p.is_finite() {
                return Err(numeric!("matrix is singular (zero pivot in column {col})"));
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    inv.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            det = det * p;
            let recip = S::one() / p;
            for j in 0..n {
                a[col * n + j] = a[col * n + j] * recip;
                inv[col * n + j] = inv[col * n + j] * recip;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[r * n + col];
                if factor == S::zero() {
                    continue;
                }
                for j in 0..n {
                    a[r * n + j] = a[r * n + j] - factor * a[col * n + j];
                    inv[r * n + j] = inv[r * n + j] - factor * inv[col * n + j];
                }
            }
        }
        if det.abs() <= min_abs_det {
            return Err(numeric!("matrix is singular or ill-conditioned (|det| = {det})"));
        }
        Ok((Self { n, data: inv }, det))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_permutation_needs_pivoting() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let (inv, det) = m.inverse_with_det(1e-9).unwrap();
        assert_eq!(det, -1.0);
        assert_eq!(inv, m);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(m.inverse_with_det(1e-9), Err(crate::Error::Numeric(_))));
    }

    #[test]
    fn ragged_rows_are_structural_errors() {
        let r = Matrix::<f64>::from_rows(&[vec![1.0, 0.0], vec![1.0]]);
        assert!(matches!(r, Err(crate::Error::Structural(_))));
    }
}

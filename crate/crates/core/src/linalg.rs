//! Cholesky factorization for symmetric positive-definite systems.

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, Matrix};
use crate::scalar::Scalar;

/// Lower-triangular factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    /// Row-major, only the lower triangle is meaningful.
    l: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Fails with [`Error::Singular`] when a pivot falls below
    /// `n * eps * max(diag(A))`.
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Cholesky needs a square matrix, got {:?}",
                a.shape()
            )));
        }
        let max_diag = (0..n).map(|i| a[(i, i)]).fold(T::zero(), T::max);
        let tol = T::from_usize_lossy(n.max(1)) * T::epsilon() * max_diag;
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let s = a[(i, j)] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                if i == j {
                    if !(s > tol) {
                        let condition = if s > T::zero() {
                            (max_diag / s).as_f64()
                        } else {
                            f64::INFINITY
                        };
                        return Err(Error::Singular { condition });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Rough 2-norm condition estimate `(max L_ii / min L_ii)^2`.
    pub fn condition_estimate(&self) -> f64 {
        let diag = (0..self.n).map(|i| self.l[i * self.n + i].as_f64());
        let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        if self.n == 0 {
            1.0
        } else {
            (hi / lo).powi(2)
        }
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.n;
        if b.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows()
            )));
        }
        let mut x = b.clone();
        // L z = b
        for i in 0..n {
            let (done, rest) = x.as_mut_slice().split_at_mut(i * b.cols());
            let xi = &mut rest[..b.cols()];
            for j in 0..i {
                let lij = self.l[i * n + j];
                if lij != T::zero() {
                    axpy(-lij, &done[j * b.cols()..(j + 1) * b.cols()], xi);
                }
            }
            let d = self.l[i * n + i];
            xi.iter_mut().for_each(|v| *v /= d);
        }
        // Lᵀ x = z
        for i in (0..n).rev() {
            let (head, tail) = x.as_mut_slice().split_at_mut((i + 1) * b.cols());
            let xi = &mut head[i * b.cols()..];
            for j in i + 1..n {
                let lji = self.l[j * n + i];
                if lji != T::zero() {
                    let off = (j - i - 1) * b.cols();
                    axpy(-lji, &tail[off..off + b.cols()], xi);
                }
            }
            let d = self.l[i * n + i];
            xi.iter_mut().for_each(|v| *v /= d);
        }
        Ok(x)
    }
}

//! Independent oracles for the readout, built on nalgebra.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rtd_rc::matrix::Matrix;
use rtd_rc::reservoir::StateMatrix;

pub fn to_na(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// `(xᵀx + λI)⁻¹ xᵀy` through an explicit LU inverse.
pub fn ridge_by_inverse(x: &Matrix<f64>, y: &Matrix<f64>, lambda: f64) -> DMatrix<f64> {
    let xn = to_na(x);
    let yn = to_na(y);
    let xt = xn.transpose();
    let a = &xt * &xn + DMatrix::identity(x.cols(), x.cols()) * lambda;
    let inv = a.try_inverse().expect("oracle system is invertible");
    inv * (xt * yn)
}

/// Relative Frobenius distance between `got` and the oracle.
pub fn rel_frobenius(got: &Matrix<f64>, want: &DMatrix<f64>) -> f64 {
    let diff = to_na(got) - want;
    let scale = want.norm();
    if scale == 0.0 {
        diff.norm()
    } else {
        diff.norm() / scale
    }
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix<f64> {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub struct RidgeInstance {
    pub x: StateMatrix<f64>,
    pub y: Matrix<f64>,
    pub lambda: f64,
}

pub const LAMBDAS: [f64; 4] = [0.0, 1e-3, 1e-1, 1.0];

/// Random instance with k, j, s <= 30. Unregularised instances keep
/// `k >= j + 5` so the normal equations stay well posed.
pub fn random_instance(rng: &mut impl Rng, lambda: f64) -> RidgeInstance {
    let s = rng.random_range(1..=30);
    let (k, j) = if lambda == 0.0 {
        let j = rng.random_range(1..=25);
        (rng.random_range(j + 5..=30), j)
    } else {
        (rng.random_range(1..=30), rng.random_range(1..=30))
    };
    RidgeInstance {
        x: StateMatrix::from_matrix(random_matrix(rng, k, j)),
        y: random_matrix(rng, k, s),
        lambda,
    }
}

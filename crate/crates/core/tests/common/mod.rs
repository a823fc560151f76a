#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use spde_fbm::matfunc::DenseMatrix;
use spde_fbm::rng;

/// Random nonsymmetric `n x n` matrix with spectrum strictly in the left
/// half-plane, returned both as the crate type and as an nalgebra matrix.
pub fn stable_matrix(seed: u64, n: usize) -> (DenseMatrix, DMatrix<f64>) {
    let mut r = rng::derive(seed, &[0xacce]);
    let scale = r.random_range(0.5..8.0);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = scale * r.random_range(-1.0..1.0) / (n as f64).sqrt();
        }
    }
    let abscissa = m
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let shift = abscissa + r.random_range(0.1..2.0);
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    (to_dense(&m), m)
}

pub fn to_dense(m: &DMatrix<f64>) -> DenseMatrix {
    let n = m.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
    DenseMatrix::from_rows(&rows)
}

pub fn random_vector(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng::derive(seed, &[0x7ec7]);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b)
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

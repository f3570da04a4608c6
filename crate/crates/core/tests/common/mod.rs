//! Shared fixtures for the integration tests.

#![allow(dead_code)]

use hidim::DataMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn data(values: DMatrix<f64>) -> DataMatrix {
    DataMatrix::new(values).expect("finite test matrix")
}

/// Random orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    gaussian(n, n, rng).qr().q()
}

/// Well-conditioned random nonsingular matrix with entries of either sign.
pub fn nonsingular(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let q1 = orthogonal(n, rng);
    let q2 = orthogonal(n, rng);
    let s = DVector::from_fn(n, |_, _| rng.random_range(0.2..5.0));
    q1 * DMatrix::from_diagonal(&s) * q2
}

/// Hat-matrix diagonal `diag(X (XᵗX)⁻¹ Xᵗ)` by direct inversion.
pub fn hat_diagonal(x: &DMatrix<f64>) -> Vec<f64> {
    let xtx_inv = (x.transpose() * x).try_inverse().expect("full column rank");
    (0..x.nrows())
        .map(|i| {
            let row = x.row(i);
            (&row * &xtx_inv * row.transpose())[(0, 0)]
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Log-determinant of the divisor-|subset| covariance of the chosen rows.
pub fn subset_log_det(x: &DMatrix<f64>, subset: &[usize]) -> f64 {
    let p = x.ncols();
    let k = subset.len() as f64;
    let mean = subset.iter().fold(DVector::zeros(p), |acc, &i| acc + x.row(i).transpose()) / k;
    let cov = subset.iter().fold(DMatrix::zeros(p, p), |acc, &i| {
        let d = x.row(i).transpose() - &mean;
        acc + &d * d.transpose()
    }) / k;
    cov.determinant().ln()
}

/// Every k-subset of 0..n, in lexicographic order.
pub fn all_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

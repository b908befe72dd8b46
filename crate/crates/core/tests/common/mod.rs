#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(n, p, |_, _| normal(&mut r))
}

pub fn gaussian_vec(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

/// Orthogonal factor of a Gaussian matrix.
pub fn random_orthogonal(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |_, _| normal(rng)).qr().q()
}

/// Gaussian matrix with its condition number kept moderate.
pub fn random_nonsingular(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let a = DMatrix::from_fn(p, p, |_, _| normal(rng));
        let s = a.clone().singular_values();
        if s.max() / s.min() < 50.0 {
            return a;
        }
    }
}

/// `‖a - b‖ / max(‖b‖, 1)`.
pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

pub fn rel_err_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// Adds `v` to every row.
pub fn shift_rows(x: &DMatrix<f64>, v: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        row += v.transpose();
    }
    out
}

pub fn column(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

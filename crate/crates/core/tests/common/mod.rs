#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_aib::dense::DenseMatrix;
use sparse_aib::SymSparseMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Sparse, strictly diagonally dominant SPD matrix. Each row gets about
/// `per_row` off-diagonal entries; `margin` is added on top of the row sum.
pub fn dominant_spd(rng: &mut ChaCha8Rng, n: usize, per_row: usize, margin: f64) -> SymSparseMatrix {
    let mut entries = Vec::new();
    let mut row_sum = vec![0.0; n];
    for i in 1..n {
        for _ in 0..per_row.div_ceil(2) {
            let j = rng.random_range(0..i);
            let v: f64 = rng.random_range(-1.0..1.0);
            entries.push((i, j, v));
            row_sum[i] += v.abs();
            row_sum[j] += v.abs();
        }
    }
    for (i, s) in row_sum.iter().enumerate() {
        entries.push((i, i, s + margin + rng.random_range(0.0..1.0)));
    }
    SymSparseMatrix::from_triplets(n, entries).unwrap()
}

/// Dense SPD matrix `Q diag(λ) Qᵀ` with eigenvalues log-spaced in `[1, cond]`.
pub fn spectral_spd(rng: &mut ChaCha8Rng, n: usize, cond: f64) -> DenseMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = g.qr().q();
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| {
        if n == 1 {
            1.0
        } else {
            cond.powf(i as f64 / (n - 1) as f64)
        }
    }));
    let a = &q * lambda * q.transpose();
    DenseMatrix::from_fn(n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

pub fn to_nalgebra(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j))
}

pub fn eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(to_nalgebra(a)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn condition_number(a: &DenseMatrix) -> f64 {
    let ev = eigenvalues(a);
    ev[ev.len() - 1] / ev[0]
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn rel_err(x: &[f64], reference: &[f64]) -> f64 {
    norm(&sub(x, reference)) / norm(reference)
}

pub fn a_norm_sq(a: &DenseMatrix, d: &[f64]) -> f64 {
    dot(d, &a.matvec(d))
}

/// `‖UᵀAU − D‖_F / ‖A‖_F`.
pub fn factor_defect(a: &DenseMatrix, u: &DenseMatrix, pivots: &[f64]) -> f64 {
    let utau = u.transpose().matmul(a).matmul(u);
    utau.sub(&DenseMatrix::from_diagonal(pivots)).frobenius() / a.frobenius()
}

//! Dense linear-algebra helpers on top of `ndarray`, with `nalgebra` for the
//! symmetric eigensolver.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

/// Eigen-decomposition `M = V diag(values) V^T` of a symmetric matrix, with
/// eigenvalues sorted in descending order and eigenvectors as columns of `V`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

pub fn sym_eigen(m: ArrayView2<'_, f64>) -> SymEigen {
    let (r, c) = m.dim();
    assert_eq!(r, c, "sym_eigen needs a square matrix");
    let dm = DMatrix::from_fn(r, c, |i, j| 0.5 * (m[[i, j]] + m[[j, i]]));
    let eig = SymmetricEigen::new(dm);
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = Array1::from_iter(order.iter().map(|&k| eig.eigenvalues[k]));
    let vectors = Array2::from_shape_fn((r, r), |(i, j)| eig.eigenvectors[(i, order[j])]);
    SymEigen { values, vectors }
}

/// `X^T X` for an `n x d` data matrix.
pub fn gram(x: ArrayView2<'_, f64>) -> Array2<f64> {
    x.t().dot(&x)
}

/// Largest eigenvalue of `X^T X` by power iteration (no explicit Gram matrix).
pub fn top_eigenvalue_of_gram(x: ArrayView2<'_, f64>, iters: usize) -> f64 {
    let d = x.ncols();
    let mut v = Array1::from_elem(d, 1.0 / (d as f64).sqrt());
    // break symmetry with a deterministic ramp
    for (i, e) in v.iter_mut().enumerate() {
        *e += 1e-3 * (i as f64 / d as f64);
    }
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = x.t().dot(&x.dot(&v));
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = v.dot(&w) / v.dot(&v);
        v = w / norm;
    }
    lambda
}

pub fn standard_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, std: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || std * rng.sample::<f64, _>(StandardNormal))
}

pub fn standard_normal_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, std: f64) -> Array1<f64> {
    Array1::from_shape_simple_fn(len, || std * rng.sample::<f64, _>(StandardNormal))
}

pub fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

pub fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

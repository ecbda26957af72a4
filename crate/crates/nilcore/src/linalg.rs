//! Thin helpers over `nalgebra` for the small dense matrices used here.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub fn c1() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

pub fn ci() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

/// Eigenvalues of a Hermitian matrix, sorted in decreasing order.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    ev
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues decreasing.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMat::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (vals, vecs)
}

pub fn det(m: &CMat) -> Complex64 {
    m.clone().determinant()
}

/// Solve `a x = b`; `None` when `a` is singular.
pub fn solve(a: &CMat, b: &CVec) -> Option<CVec> {
    a.clone().lu().solve(b)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = (0..n)
        .map(|r| (0..n).map(|k| a[(r, k)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * Complex64::new(scale, 0.0);
    let mut out = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..40 {
        term = &term * &x * Complex64::new(1.0 / k as f64, 0.0);
        out += &term;
        if term.iter().all(|z| z.norm() < 1e-18) {
            break;
        }
    }
    for _ in 0..squarings {
        out = &out * &out;
    }
    out
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Singular values of a real matrix, decreasing.
pub fn singular_values_real(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    sv
}

/// Count singular values above `rel · σ_max`.
pub fn numerical_rank(sv: &[f64], rel: f64) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * top).count()
}

/// Real form of a complex matrix acting on `(Re x, Im x)`.
pub fn realify(m: &CMat) -> DMatrix<f64> {
    let (r, k) = m.shape();
    DMatrix::from_fn(2 * r, 2 * k, |i, j| {
        let z = m[(i % r, j % k)];
        match (i < r, j < k) {
            (true, true) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
            (false, false) => z.re,
        }
    })
}

pub fn is_unitary(m: &CMat, tol: f64) -> bool {
    let n = m.nrows();
    (m.adjoint() * m - CMat::identity(n, n))
        .iter()
        .all(|z| z.norm() < tol)
}

//! Spectral routines backed by faer; storage stays in nalgebra matrices.
//!
//! faer runs sequentially here so that results are bit-reproducible
//! regardless of thread scheduling.

use faer::{Mat, Par, Side};
use nalgebra::{DMatrix, DVector};

use super::matrix::C64;

fn seq() {
    faer::set_global_parallelism(Par::Seq);
}

fn to_faer(m: &DMatrix<C64>) -> Mat<faer::c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    })
}

fn to_faer_real(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, faer::c64>) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        C64::new(z.re, z.im)
    })
}

/// Dense product `a * b`; much faster than nalgebra's generic kernel for
/// complex entries.
pub(crate) fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    seq();
    from_faer((to_faer(a) * to_faer(b)).as_ref())
}

/// Ascending eigenvalues and orthonormal eigenvectors (columns) of the
/// Hermitian part of `m`.
pub(crate) fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    seq();
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let evd = to_faer(&herm)
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigendecomposition converges");
    let (s, u) = (evd.S(), evd.U());
    let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| {
        let z = u[(i, j)];
        C64::new(z.re, z.im)
    });
    (values, vectors)
}

/// Singular values in nonincreasing order.
pub(crate) fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    seq();
    to_faer(m).singular_values().expect("SVD converges")
}

/// Minimum-norm least squares `argmin ‖a x − b‖` via the pseudo-inverse;
/// singular values below `rcond · σ_max` are treated as zero.
pub(crate) fn lstsq_real(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> DVector<f64> {
    seq();
    let svd = to_faer_real(a).thin_svd().expect("SVD converges");
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let k = s.column_vector().nrows();
    let smax = (0..k).map(|i| s[i]).fold(0.0, f64::max);
    let mut x = DVector::<f64>::zeros(a.ncols());
    for i in 0..k {
        if s[i] <= rcond * smax || s[i] == 0.0 {
            continue;
        }
        let coef: f64 = (0..a.nrows()).map(|r| u[(r, i)] * b[r]).sum::<f64>() / s[i];
        for c in 0..a.ncols() {
            x[c] += coef * v[(c, i)];
        }
    }
    x
}

/// `exp(i h)` for Hermitian `h`.
pub(crate) fn expi_hermitian(h: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = eigh(h);
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| C64::from_polar(1.0, v)),
    ));
    &vecs * phases * vecs.adjoint()
}

/// Orthonormal eigenbasis and eigenvalues of a normal matrix (e.g. a unitary),
/// from the commuting Hermitian and anti-Hermitian parts.
pub(crate) fn eig_normal(m: &DMatrix<C64>) -> (Vec<C64>, DMatrix<C64>) {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let anti = (m - m.adjoint()) * C64::new(0.0, -0.5);
    // a generic real mix separates eigenvalues of commuting parts
    let mix = &herm + &anti * C64::new(std::f64::consts::SQRT_2 - 0.3, 0.0);
    let (_, vecs) = eigh(&mix);
    let vals = (0..m.nrows())
        .map(|j| {
            let v = vecs.column(j);
            (v.adjoint() * m * v)[(0, 0)]
        })
        .collect();
    (vals, vecs)
}

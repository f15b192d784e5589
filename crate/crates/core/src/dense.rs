//! Dense helpers over `faer` matrices and plain complex vectors.

use faer::{Mat, Side};
use num_complex::Complex64;

pub type CVec = Vec<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Hermitian eigendecomposition with eigenvalues ascending; columns of the matrix are eigenvectors.
pub fn eigh(m: &Mat<Complex64>) -> (Vec<f64>, Mat<Complex64>) {
    let eig = m.selfadjoint_eigendecomposition(Side::Lower);
    let s = eig.s().column_vector();
    let vals: Vec<f64> = (0..m.nrows()).map(|i| s.read(i).re).collect();
    let vecs = eig.u().to_owned();
    sort_eigenpairs(vals, vecs)
}

pub fn eigh_real(m: &Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    let eig = m.selfadjoint_eigendecomposition(Side::Lower);
    let s = eig.s().column_vector();
    let vals: Vec<f64> = (0..m.nrows()).map(|i| s.read(i)).collect();
    let u = eig.u();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted = order.iter().map(|&i| vals[i]).collect();
    let vecs = Mat::from_fn(m.nrows(), m.ncols(), |i, j| u.read(i, order[j]));
    (sorted, vecs)
}

fn sort_eigenpairs(vals: Vec<f64>, vecs: Mat<Complex64>) -> (Vec<f64>, Mat<Complex64>) {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    if order.iter().enumerate().all(|(i, &j)| i == j) {
        return (vals, vecs);
    }
    let sorted = order.iter().map(|&i| vals[i]).collect();
    let v = Mat::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs.read(i, order[j]));
    (sorted, v)
}

pub fn column(m: &Mat<Complex64>, j: usize) -> CVec {
    (0..m.nrows()).map(|i| m.read(i, j)).collect()
}

pub fn to_col(x: &[Complex64]) -> Mat<Complex64> {
    Mat::from_fn(x.len(), 1, |i, _| x[i])
}

pub fn matvec(m: &Mat<Complex64>, x: &[Complex64]) -> CVec {
    let y = m * to_col(x);
    column(&y, 0)
}

/// `M† x`.
pub fn adjoint_matvec(m: &Mat<Complex64>, x: &[Complex64]) -> CVec {
    let y = m.adjoint() * to_col(x);
    column(&y, 0)
}

pub fn adjoint(m: &Mat<Complex64>) -> Mat<Complex64> {
    m.adjoint().to_owned()
}

pub fn max_abs(m: &Mat<Complex64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m.read(i, j).norm());
        }
    }
    out
}

pub fn max_abs_diff(a: &Mat<Complex64>, b: &Mat<Complex64>) -> f64 {
    max_abs(&(a - b))
}

pub fn hs_norm(m: &Mat<Complex64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m.read(i, j).norm_sqr();
        }
    }
    s.sqrt()
}

pub fn trace(m: &Mat<Complex64>) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m.read(i, i)).sum()
}

pub fn identity(n: usize) -> Mat<Complex64> {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn scale(m: &Mat<Complex64>, c: Complex64) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c * m.read(i, j))
}

/// `|a><b|`.
pub fn outer(a: &[Complex64], b: &[Complex64]) -> Mat<Complex64> {
    Mat::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

/// `<a|b> = Σ conj(a_i) b_i`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(a: &mut [Complex64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        a.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// `y += alpha x`.
pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub fn sub(a: &[Complex64], b: &[Complex64]) -> CVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(c: Complex64, a: &[Complex64]) -> CVec {
    a.iter().map(|x| c * x).collect()
}

/// Removes the component of `v` along the unit vector `u`.
pub fn project_out(u: &[Complex64], v: &mut [Complex64]) {
    let c = inner(u, v);
    axpy(-c, u, v);
}

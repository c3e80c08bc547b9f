//! Small dense complex linear-algebra helpers on top of nalgebra.
//!
//! Everything here works on `DMatrix<Complex64>`; the matrices in this crate
//! are at most a few hundred wide, so no attempt is made at blocking.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen, QR};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Circularly-symmetric complex Gaussian sample with unit variance.
pub fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn cn01_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    // Column-major fill so the draw order is fixed by (rows, cols).
    CMat::from_fn(rows, cols, |_, _| cn01(rng))
}

/// Haar-distributed unitary from the QR decomposition of a Gaussian matrix,
/// with the diagonal phases of R absorbed into Q.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = cn01_matrix(rng, n, n);
    let qr = QR::new(g);
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / norm;
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Column `i` of the returned matrix belongs to value `i`.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Descending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut values: Vec<f64> = SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

pub fn cholesky(m: &CMat) -> Result<Cholesky<Complex64, Dyn>> {
    let not_pd = || Error::Singular("matrix is not positive definite".into());
    let chol = Cholesky::new(hermitian_part(m)).ok_or_else(not_pd)?;
    // The complex factorization takes square roots of negative pivots instead of failing.
    let l = chol.l_dirty();
    let pd = (0..m.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-12 * d.re
    });
    if pd {
        Ok(chol)
    } else {
        Err(not_pd())
    }
}

/// `log2 det(m)` for a Hermitian positive definite matrix.
pub fn log2_det_hpd(m: &CMat) -> Result<f64> {
    let chol = cholesky(m)?;
    let l = chol.l_dirty();
    Ok((0..m.nrows()).map(|i| 2.0 * l[(i, i)].re.log2()).sum())
}

pub fn inverse_hpd(m: &CMat) -> Result<CMat> {
    Ok(cholesky(m)?.inverse())
}

/// `H H^H`, made exactly Hermitian.
pub fn gram(h: &CMat) -> CMat {
    hermitian_part(&(h * h.adjoint()))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace_re(m: &CMat) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

pub fn from_polar_unit(angle: f64) -> Complex64 {
    Complex64::from_polar(1.0, angle)
}

//! Small dense helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative threshold on `sigma_min / ||A||_2` below which a symmetric
/// matrix is treated as singular.
pub const INVERTIBILITY_RTOL: f64 = 1e-12;

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::EigenConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Eigenvalues only, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    DVector::from_vec(v)
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn symmetric_norm2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().symmetric_eigenvalues().iter().fold(0.0_f64, |acc, &l| acc.max(l.abs()))
}

/// Smallest eigenvalue of a symmetric positive semidefinite matrix, or an
/// error when it is not above `INVERTIBILITY_RTOL * ||A||_2`.
pub fn require_invertible(m: &DMatrix<f64>) -> Result<f64> {
    let eig = symmetric_eigenvalues(m);
    if eig.is_empty() {
        return Err(Error::SingularInformationMatrix { sigma_min: 0.0 });
    }
    let lo = eig[0];
    let hi = eig[eig.len() - 1].abs().max(lo.abs());
    if hi == 0.0 || lo <= INVERTIBILITY_RTOL * hi {
        return Err(Error::SingularInformationMatrix { sigma_min: lo.max(0.0) });
    }
    Ok(lo)
}

/// Numerical rank of a symmetric PSD matrix at the shared relative threshold.
pub fn psd_rank(m: &DMatrix<f64>) -> usize {
    let eig = symmetric_eigenvalues(m);
    let hi = eig.iter().fold(0.0_f64, |a, &l| a.max(l.abs()));
    if hi == 0.0 {
        return 0;
    }
    eig.iter().filter(|&&l| l > INVERTIBILITY_RTOL * hi).count()
}

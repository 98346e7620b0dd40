//! Laplacian eigenbasis, graph Fourier transform and bandlimited signals.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{invalid, Error, Result};
use crate::graph::Laplacian;
use crate::linalg::sorted_symmetric_eigen;

/// Eigenvalue gap below which the first `K` eigenvectors are not a
/// uniquely determined subspace.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Full eigendecomposition `L = V diag(lambda) V^T`, eigenvalues ascending.
///
/// Each eigenvector is sign-normalized so that its entry of largest
/// magnitude (lowest index on ties) is nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

pub fn eigendecompose(l: &Laplacian) -> Result<SpectralBasis> {
    let (eigenvalues, mut eigenvectors) = sorted_symmetric_eigen(l.matrix())?;
    for mut col in eigenvectors.column_iter_mut() {
        let mut best = 0;
        for (idx, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = idx;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(SpectralBasis { eigenvalues, eigenvectors })
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `V_K`, the first `k` eigenvectors as columns.
    pub fn subbasis(&self, k: usize) -> Result<DMatrix<f64>> {
        self.check_bandwidth(k)?;
        Ok(self.eigenvectors.columns(0, k).into_owned())
    }

    /// False when `lambda_{k-1}` and `lambda_k` coincide, i.e. `V_K` depends
    /// on how the eigensolver split a repeated eigenvalue.
    pub fn subspace_is_unique(&self, k: usize) -> bool {
        k == 0 || k >= self.n() || self.eigenvalues[k] - self.eigenvalues[k - 1] > DEGENERACY_TOL
    }

    fn check_bandwidth(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n() {
            return Err(invalid(format!("bandwidth {k} outside 1..={}", self.n())));
        }
        if !self.subspace_is_unique(k) {
            log::warn!("bandwidth {k} splits a repeated eigenvalue ({:.3e}); V_K is not unique", self.eigenvalues[k]);
        }
        Ok(())
    }

    /// Graph Fourier transform `V^T f`.
    pub fn gft(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(self.n(), f.len())?;
        Ok(self.eigenvectors.tr_mul(f))
    }

    /// Inverse transform `V c`.
    pub fn igft(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(self.n(), coeffs.len())?;
        Ok(&self.eigenvectors * coeffs)
    }

    /// `f = V_K c` with `c` the `K` leading coefficients.
    pub fn synthesize_bandlimited(&self, spec: &BandlimitedSpec) -> Result<DVector<f64>> {
        let k = spec.bandwidth();
        self.check_bandwidth(k)?;
        Ok(self.eigenvectors.columns(0, k) * spec.coefficients())
    }

    /// Rows `u_i^T` of `V_K`, one per node.
    pub fn design_rows(&self, k: usize) -> Result<DesignRows> {
        Ok(DesignRows(self.subbasis(k)?))
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Nonzero leading GFT coefficients of a bandlimited signal.
#[derive(Debug, Clone, PartialEq)]
pub struct BandlimitedSpec {
    coefficients: DVector<f64>,
}

impl BandlimitedSpec {
    pub fn new(coefficients: impl Into<Vec<f64>>) -> Result<Self> {
        let c = coefficients.into();
        if c.is_empty() {
            return Err(invalid("bandwidth must be at least 1"));
        }
        Ok(BandlimitedSpec { coefficients: DVector::from_vec(c) })
    }

    pub fn bandwidth(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }
}

/// Candidate measurement vectors: an `N x K` matrix whose row `i` is the
/// test vector available when sampling node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRows(DMatrix<f64>);

impl DesignRows {
    /// Arbitrary rows; `design_rows` is the usual constructor.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(invalid("design rows must be a nonempty matrix"));
        }
        Ok(DesignRows(matrix))
    }

    /// Number of candidate nodes `N`.
    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// Bandwidth `K`.
    pub fn k(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn row(&self, i: usize) -> RowDVector<f64> {
        self.0.row(i).into_owned()
    }

    /// Rows indexed by a node sequence, repeats allowed (`Psi V_K`).
    pub fn select(&self, nodes: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(nodes.len(), self.k(), |r, c| self.0[(nodes[r], c)])
    }
}

//! Relaxed experimental design over the probability simplex, probabilistic
//! quantization to integer per-node quotas, and the perturbation theory
//! that tells how large the budget must be for the quantized design to stay
//! invertible.
//!
//! With `u_i^T` the rows of `V_K` and `p` a point of the simplex, the
//! information matrix is `A(p) = sum_i p_i u_i u_i^T`. Because `V_K` has
//! orthonormal columns, each scalarization of the error covariance
//! `V_K A^{-1} V_K^T` equals the same scalarization of `A^{-1}`:
//!
//! | criterion | value            | gradient in `p_i`        |
//! |-----------|------------------|--------------------------|
//! | A         | `tr(A^{-1})`     | `-u_i^T A^{-2} u_i`      |
//! | D         | `-log det A`     | `-u_i^T A^{-1} u_i`      |
//! | E         | `1/lambda_min(A)`| `-(u_i^T v_min)^2`       |

mod perturbation;
mod pipeline;
mod quantize;
mod solver;

pub use perturbation::{
    invertibility_probability_bound, invertibility_probability_bound_from_variances, min_sample_size,
    perturbation_norm, uniform_residual_variance, PerturbationNorm,
};
pub use pipeline::{design_pipeline, quantize_design, DesignDiagnostics, DesignOutcome, QuantizedDesign};
pub use quantize::{
    budget_repair, empirical_residual_variance, probabilistic_quantize, quantize_raw, quantized_information_matrix,
    two_point_variance, Quantization, QuantizationResidual, SampleAllocation,
};
pub use solver::{project_simplex, solve_relaxed, RelaxedSolution, SolverOptions};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{require_invertible, sorted_symmetric_eigen};
use crate::spectral::DesignRows;

/// Scalarization of the error covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "a")]
    AOpt,
    #[serde(rename = "d")]
    DOpt,
    #[serde(rename = "e")]
    EOpt,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::AOpt, Criterion::DOpt, Criterion::EOpt];

    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::AOpt => "a",
            Criterion::DOpt => "d",
            Criterion::EOpt => "e",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "a" | "aopt" | "aoptimal" => Ok(Criterion::AOpt),
            "d" | "dopt" | "doptimal" => Ok(Criterion::DOpt),
            "e" | "eopt" | "eoptimal" => Ok(Criterion::EOpt),
            _ => Err(invalid(format!("unknown criterion `{s}` (expected a, d or e)"))),
        }
    }
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DesignWeights(Vec<f64>);

impl DesignWeights {
    pub const SUM_TOL: f64 = 1e-10;

    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(invalid("design weights must be nonempty"));
        }
        if let Some(i) = p.iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(invalid(format!("design weight p[{i}] = {} is not a proportion", p[i])));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(invalid(format!("design weights sum to {sum}, not 1")));
        }
        Ok(DesignWeights(p))
    }

    pub fn uniform(n: usize) -> Self {
        DesignWeights(vec![1.0 / n as f64; n])
    }

    /// All mass on node `j`.
    pub fn vertex(n: usize, j: usize) -> Self {
        let mut p = vec![0.0; n];
        p[j] = 1.0;
        DesignWeights(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl<'de> Deserialize<'de> for DesignWeights {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        DesignWeights::new(v).map_err(serde::de::Error::custom)
    }
}

/// Symmetric `K x K` matrix `sum_i w_i u_i u_i^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationMatrix(DMatrix<f64>);

impl InformationMatrix {
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let sym = (&m + m.transpose()) * 0.5;
        if (&sym - &m).amax() > 1e-10 {
            return Err(invalid("information matrix is not symmetric"));
        }
        Ok(InformationMatrix(sym))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.nrows()
    }

    /// Smallest eigenvalue; for a PSD matrix this is `sigma_min`.
    pub fn sigma_min(&self) -> f64 {
        crate::linalg::symmetric_eigenvalues(&self.0)[0]
    }
}

/// `sum_i w_i u_i u_i^T` for arbitrary nonnegative weights.
pub(crate) fn weighted_gram(rows: &DesignRows, w: &[f64]) -> Result<DMatrix<f64>> {
    if w.len() != rows.n() {
        return Err(Error::DimensionMismatch { expected: rows.n(), found: w.len() });
    }
    let v = rows.matrix();
    let mut scaled = v.clone();
    for (mut r, &wi) in scaled.row_iter_mut().zip(w) {
        r *= wi;
    }
    let a = v.tr_mul(&scaled);
    Ok((&a + a.transpose()) * 0.5)
}

pub fn information_matrix(rows: &DesignRows, p: &DesignWeights) -> Result<InformationMatrix> {
    Ok(InformationMatrix(weighted_gram(rows, p.as_slice())?))
}

/// Criterion value at `A`; errors when `A` is numerically singular.
pub fn criterion_value(a: &InformationMatrix, c: Criterion) -> Result<f64> {
    criterion_of_matrix(a.matrix(), c)
}

pub(crate) fn criterion_of_matrix(a: &DMatrix<f64>, c: Criterion) -> Result<f64> {
    let lam_min = require_invertible(a)?;
    match c {
        Criterion::EOpt => Ok(1.0 / lam_min),
        Criterion::DOpt => {
            let chol = cholesky(a)?;
            Ok(-2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
        }
        Criterion::AOpt => Ok(cholesky(a)?.inverse().trace()),
    }
}

fn cholesky(a: &DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    a.clone().cholesky().ok_or(Error::SingularInformationMatrix { sigma_min: 0.0 })
}

/// Gradient of the criterion with respect to every `p_i`, given `A = A(p)`.
pub(crate) fn gradient_at(rows: &DesignRows, a: &DMatrix<f64>, c: Criterion) -> Result<DVector<f64>> {
    require_invertible(a)?;
    let v = rows.matrix();
    match c {
        Criterion::DOpt | Criterion::AOpt => {
            let a_inv = cholesky(a)?.inverse();
            let b = v * a_inv;
            Ok(DVector::from_fn(rows.n(), |i, _| {
                if c == Criterion::DOpt {
                    -v.row(i).dot(&b.row(i))
                } else {
                    -b.row(i).norm_squared()
                }
            }))
        }
        Criterion::EOpt => {
            let (_, vecs) = sorted_symmetric_eigen(a)?;
            let proj = v * vecs.column(0);
            Ok(proj.map(|x| -x * x))
        }
    }
}

/// Gradient (a subgradient for E-optimality with a repeated smallest
/// eigenvalue) of the criterion at `A(p)`.
pub fn criterion_gradient(rows: &DesignRows, p: &DesignWeights, c: Criterion) -> Result<DVector<f64>> {
    let a = weighted_gram(rows, p.as_slice())?;
    gradient_at(rows, &a, c)
}

/// Linear-minimization gap over the simplex:
/// `max_i(-g_i) + sum_j p_j g_j`. Zero exactly at stationary points.
pub fn duality_gap(rows: &DesignRows, p: &DesignWeights, c: Criterion) -> Result<f64> {
    let g = criterion_gradient(rows, p, c)?;
    Ok(gap_from_gradient(p.as_slice(), &g))
}

pub(crate) fn gap_from_gradient(p: &[f64], g: &DVector<f64>) -> f64 {
    let g_min = g.iter().copied().fold(f64::INFINITY, f64::min);
    let pg: f64 = p.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
    pg - g_min
}

//! How far quantization moves the information matrix, and how large the
//! budget must be for the quantized design to stay invertible.
//!
//! With `dA = sum_i dp_i u_i u_i^T` and `V_K` having orthonormal columns,
//! `||dA||_2 <= max_i |dp_i|`. `A + dA` is invertible whenever
//! `||dA||_2 < sigma_min(A)`; with independent residuals and Chebyshev's
//! inequality this holds with probability at least
//! `prod_i (1 - Var[dp_i] / sigma_min^2)`.
//!
//! Treating `p_i` as uniform within its grid cell gives the closed-form
//! variance `5 / (192 M^3)` used by [`invertibility_probability_bound`] and
//! [`min_sample_size`]. The exact variance of one rounding is
//! `f (1 - f) / M^2` (see [`super::two_point_variance`]), which is much
//! larger; [`invertibility_probability_bound_from_variances`] takes any
//! per-node variances, e.g. exact or empirical ones.

use serde::Serialize;

use super::quantize::QuantizationResidual;
use super::weighted_gram;
use crate::error::{invalid, Error, Result};
use crate::linalg::symmetric_norm2;
use crate::spectral::DesignRows;

/// Closed-form residual variance `5 / (192 M^3)`.
pub fn uniform_residual_variance(budget: usize) -> f64 {
    let m = budget as f64;
    5.0 / (192.0 * m * m * m)
}

/// Lower bound on `P(||dA||_2 < sigma_min)` using the closed-form variance
/// for all `n` nodes: `max(0, (1 - v / sigma_min^2))^n`.
pub fn invertibility_probability_bound(sigma_min: f64, budget: usize, n: usize) -> Result<f64> {
    check_inputs(sigma_min, budget, n)?;
    let factor = 1.0 - uniform_residual_variance(budget) / (sigma_min * sigma_min);
    if factor <= 0.0 {
        return Ok(0.0);
    }
    Ok(factor.powi(n as i32).clamp(0.0, 1.0))
}

/// Same bound with one variance per node. A factor that is not positive
/// makes the whole bound zero.
pub fn invertibility_probability_bound_from_variances(sigma_min: f64, variances: &[f64]) -> Result<f64> {
    if !(sigma_min > 0.0) {
        return Err(invalid("sigma_min must be positive"));
    }
    let s2 = sigma_min * sigma_min;
    let mut bound = 1.0;
    for &v in variances {
        let factor = 1.0 - v / s2;
        if factor <= 0.0 {
            return Ok(0.0);
        }
        bound *= factor;
    }
    Ok(bound)
}

/// Smallest budget for which the closed-form bound reaches `eta`:
/// `ceil((5 / (192 (1 - eta^{1/n}) sigma_min^2))^{1/3})`, at least 1.
pub fn min_sample_size(sigma_min: f64, n: usize, eta: f64) -> Result<usize> {
    if !(sigma_min > 0.0) || !sigma_min.is_finite() {
        return Err(invalid("sigma_min must be positive"));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid(format!("target probability {eta} outside (0, 1)")));
    }
    if n == 0 {
        return Err(invalid("node count must be positive"));
    }
    // 1 - eta^{1/n} without cancellation for eta near 1.
    let one_minus_root = -(eta.ln() / n as f64).exp_m1();
    let arg = 5.0 / (192.0 * one_minus_root * sigma_min * sigma_min);
    let m = arg.cbrt().ceil();
    if !m.is_finite() {
        return Err(invalid("sample size overflows"));
    }
    Ok((m as usize).max(1))
}

fn check_inputs(sigma_min: f64, budget: usize, n: usize) -> Result<()> {
    if !(sigma_min > 0.0) {
        return Err(invalid("sigma_min must be positive"));
    }
    if budget == 0 || n == 0 {
        return Err(invalid("budget and node count must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationNorm {
    /// `||sum_i dp_i u_i u_i^T||_2`.
    pub spectral_norm: f64,
    /// `max_i |dp_i|`, an upper bound on `spectral_norm` for orthonormal
    /// `V_K`.
    pub max_abs_residual: f64,
}

pub fn perturbation_norm(rows: &DesignRows, residual: &QuantizationResidual) -> Result<PerturbationNorm> {
    if residual.0.len() != rows.n() {
        return Err(Error::DimensionMismatch { expected: rows.n(), found: residual.0.len() });
    }
    let delta = weighted_gram(rows, &residual.0)?;
    let out = PerturbationNorm { spectral_norm: symmetric_norm2(&delta), max_abs_residual: residual.max_abs() };
    debug_assert!(
        !is_orthonormal(rows) || out.spectral_norm <= out.max_abs_residual + 1e-10,
        "perturbation norm exceeds its bound: {out:?}"
    );
    Ok(out)
}

fn is_orthonormal(rows: &DesignRows) -> bool {
    let g = rows.matrix().tr_mul(rows.matrix());
    (g - nalgebra::DMatrix::identity(rows.k(), rows.k())).amax() < 1e-8
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn bound_example() {
        let b = invertibility_probability_bound(0.1, 10, 5).unwrap();
        let v: f64 = 5.0 / 192_000.0;
        assert!((v - 2.604e-5).abs() < 1e-8);
        assert!((b - 0.987_05).abs() < 5e-6, "{b}");
    }

    #[test]
    fn bound_clamps_to_zero() {
        assert_eq!(invertibility_probability_bound(1e-3, 1, 3).unwrap(), 0.0);
        assert_eq!(invertibility_probability_bound_from_variances(0.1, &[0.02]).unwrap(), 0.0);
    }

    #[test]
    fn bound_decreases_with_node_count() {
        let mut prev = 1.0;
        for n in 1..50 {
            let b = invertibility_probability_bound(0.05, 12, n).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn min_sample_size_example() {
        assert_eq!(min_sample_size(0.1, 10, 0.9).unwrap(), 7);
    }

    #[test]
    fn min_sample_size_small_eta() {
        assert_eq!(min_sample_size(0.5, 1, 1e-12).unwrap(), 1);
    }

    #[test]
    fn min_sample_size_rejects_bad_parameters() {
        assert!(min_sample_size(0.0, 10, 0.9).is_err());
        assert!(min_sample_size(0.1, 10, 1.0).is_err());
        assert!(min_sample_size(0.1, 10, 0.0).is_err());
        assert!(min_sample_size(0.1, 0, 0.5).is_err());
        assert!(invertibility_probability_bound(-1.0, 10, 5).is_err());
        assert!(invertibility_probability_bound(0.1, 0, 5).is_err());
    }

    #[test]
    fn zero_residual_has_zero_norm() {
        let rows = DesignRows::new(DMatrix::identity(3, 3)).unwrap();
        let n = perturbation_norm(&rows, &QuantizationResidual(vec![0.0; 3])).unwrap();
        assert_eq!((n.spectral_norm, n.max_abs_residual), (0.0, 0.0));
    }

    #[test]
    fn single_residual_is_rank_one() {
        let s = 0.5f64.sqrt();
        let rows = DesignRows::new(DMatrix::from_row_slice(2, 2, &[s, s, s, -s])).unwrap();
        let n = perturbation_norm(&rows, &QuantizationResidual(vec![0.0, -0.3])).unwrap();
        assert!((n.spectral_norm - 0.3).abs() < 1e-12);
        assert!((n.max_abs_residual - 0.3).abs() < 1e-15);
    }
}

//! Probabilistic quantization of a fractional design to integer quotas.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{weighted_gram, DesignWeights, InformationMatrix};
use crate::error::{invalid, Error, Result};
use crate::linalg::require_invertible;
use crate::spectral::DesignRows;

/// Grid snapping tolerance: `p_i * M` this close to an integer is taken to
/// be on the grid, so grid points quantize to themselves.
const GRID_SNAP: f64 = 1e-9;

/// Integer per-node sample counts with a fixed total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleAllocation {
    counts: Vec<usize>,
    budget: usize,
}

impl SampleAllocation {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        let budget = counts.iter().sum();
        if counts.is_empty() || budget == 0 {
            return Err(invalid("allocation must contain at least one sample"));
        }
        Ok(SampleAllocation { counts, budget })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    /// Proportions `m_i / M`.
    pub fn proportions(&self) -> Vec<f64> {
        let m = self.budget as f64;
        self.counts.iter().map(|&c| c as f64 / m).collect()
    }
}

/// `m_i / M - p_i` for every node.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct QuantizationResidual(pub Vec<f64>);

impl QuantizationResidual {
    pub fn between(counts: &[usize], budget: usize, p: &DesignWeights) -> Result<Self> {
        if counts.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: p.len(), found: counts.len() });
        }
        let m = budget as f64;
        Ok(QuantizationResidual(counts.iter().zip(p.as_slice()).map(|(&c, &pi)| c as f64 / m - pi).collect()))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

/// One quantization draw: raw independent roundings and the repaired
/// allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantization {
    pub allocation: SampleAllocation,
    /// `m/M - p` after repair; sums to zero.
    pub residual: QuantizationResidual,
    /// Independent per-node roundings, before the budget is enforced.
    pub raw_counts: Vec<usize>,
    /// `raw/M - p`; the independent residuals the invertibility bound is
    /// stated for.
    pub raw_residual: QuantizationResidual,
}

/// Rounds each `p_i M` independently to `floor` or `floor + 1`, with the
/// upper value taken with probability equal to the fractional part, so
/// `E[m_i / M] = p_i`.
pub fn quantize_raw<R: Rng + ?Sized>(p: &DesignWeights, budget: usize, rng: &mut R) -> Result<Vec<usize>> {
    if budget == 0 {
        return Err(invalid("sample budget must be at least 1"));
    }
    let m = budget as f64;
    Ok(p.as_slice()
        .iter()
        .map(|&pi| {
            let x = pi * m;
            let nearest = x.round();
            if (x - nearest).abs() <= GRID_SNAP {
                return nearest as usize;
            }
            let k = x.floor();
            let up = rng.random::<f64>() < x - k;
            k as usize + usize::from(up)
        })
        .collect())
}

pub fn probabilistic_quantize<R: Rng + ?Sized>(p: &DesignWeights, budget: usize, rng: &mut R) -> Result<Quantization> {
    let raw_counts = quantize_raw(p, budget, rng)?;
    let raw_residual = QuantizationResidual::between(&raw_counts, budget, p)?;
    let allocation = budget_repair(&raw_counts, p, budget)?;
    let residual = QuantizationResidual::between(allocation.counts(), budget, p)?;
    Ok(Quantization { allocation, residual, raw_counts, raw_residual })
}

/// Forces `sum m_i = M` one grid step at a time.
///
/// Surplus: decrement the node with the largest `m_i/M - p_i` among
/// `m_i >= 1`. Deficit: increment the node with the largest
/// `p_i - m_i/M`. Ties go to the lowest index.
pub fn budget_repair(raw: &[usize], p: &DesignWeights, budget: usize) -> Result<SampleAllocation> {
    if raw.len() != p.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: raw.len() });
    }
    if budget == 0 {
        return Err(invalid("sample budget must be at least 1"));
    }
    let m = budget as f64;
    let p = p.as_slice();
    let mut counts = raw.to_vec();
    let mut total: usize = counts.iter().sum();
    while total > budget {
        let mut pick: Option<usize> = None;
        for i in 0..counts.len() {
            if counts[i] == 0 {
                continue;
            }
            let excess = counts[i] as f64 / m - p[i];
            if pick.is_none_or(|b| excess > counts[b] as f64 / m - p[b]) {
                pick = Some(i);
            }
        }
        let i = pick.expect("positive total implies a nonzero count");
        counts[i] -= 1;
        total -= 1;
    }
    while total < budget {
        let mut pick = 0;
        for i in 1..counts.len() {
            if p[i] - counts[i] as f64 / m > p[pick] - counts[pick] as f64 / m {
                pick = i;
            }
        }
        counts[pick] += 1;
        total += 1;
    }
    SampleAllocation::new(counts)
}

/// `sum_i (m_i / M) u_i u_i^T`; errors when the quantized design lost rank.
pub fn quantized_information_matrix(rows: &DesignRows, alloc: &SampleAllocation) -> Result<InformationMatrix> {
    let a = weighted_gram(rows, &alloc.proportions())?;
    require_invertible(&a)?;
    Ok(InformationMatrix(a))
}

/// Exact variance of one rounding residual: `f (1 - f) / M^2` with `f` the
/// fractional part of `p_i M`.
pub fn two_point_variance(p_i: f64, budget: usize) -> f64 {
    let m = budget as f64;
    let x = p_i * m;
    let f = x - x.floor();
    f * (1.0 - f) / (m * m)
}

/// Per-node sample variance of the raw residual over `draws` quantizations.
pub fn empirical_residual_variance<R: Rng + ?Sized>(
    p: &DesignWeights,
    budget: usize,
    draws: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if draws < 2 {
        return Err(invalid("need at least two draws for a variance"));
    }
    let n = p.len();
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    for _ in 0..draws {
        let raw = quantize_raw(p, budget, rng)?;
        let r = QuantizationResidual::between(&raw, budget, p)?;
        for (i, x) in r.0.iter().enumerate() {
            sum[i] += x;
            sum_sq[i] += x * x;
        }
    }
    let d = draws as f64;
    Ok(sum.iter().zip(&sum_sq).map(|(s, s2)| ((s2 - s * s / d) / (d - 1.0)).max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use nalgebra::DMatrix;

    fn w(v: &[f64]) -> DesignWeights {
        DesignWeights::new(v.to_vec()).unwrap()
    }

    #[test]
    fn grid_points_quantize_to_themselves() {
        let mut rng = seeded(1);
        for _ in 0..100 {
            let q = probabilistic_quantize(&w(&[0.3, 0.7]), 10, &mut rng).unwrap();
            assert_eq!(q.allocation.counts(), &[3, 7]);
            let q = probabilistic_quantize(&w(&[0.25, 0.75]), 4, &mut rng).unwrap();
            assert_eq!(q.allocation.counts(), &[1, 3]);
            assert!(q.residual.max_abs() < 1e-12);
        }
    }

    #[test]
    fn midpoint_rounds_either_way_evenly() {
        let mut rng = seeded(2);
        let p = w(&[0.25, 0.75]);
        let draws = 20_000;
        let mut up = 0;
        for _ in 0..draws {
            let raw = quantize_raw(&p, 10, &mut rng).unwrap();
            assert!(raw[0] == 2 || raw[0] == 3);
            up += usize::from(raw[0] == 3);
        }
        let freq = up as f64 / draws as f64;
        // 4 standard errors of a fair coin at 20k draws.
        assert!((freq - 0.5).abs() < 4.0 * (0.25 / draws as f64).sqrt(), "{freq}");
    }

    #[test]
    fn repair_keeps_consistent_quotas() {
        let a = budget_repair(&[3, 7], &w(&[0.3, 0.7]), 10).unwrap();
        assert_eq!(a.counts(), &[3, 7]);
    }

    #[test]
    fn repair_increments_by_residual() {
        let a = budget_repair(&[3, 4], &w(&[0.25, 0.75]), 10).unwrap();
        assert_eq!(a.counts(), &[3, 7]);
        assert_eq!(a.budget(), 10);
    }

    #[test]
    fn repair_decrements_by_residual() {
        let a = budget_repair(&[2, 3], &w(&[0.5, 0.5]), 4).unwrap();
        assert_eq!(a.counts(), &[2, 2]);
    }

    #[test]
    fn repair_ties_go_to_lowest_index() {
        let a = budget_repair(&[0, 0, 0], &w(&[0.25, 0.5, 0.25]), 2).unwrap();
        assert_eq!(a.counts(), &[1, 1, 0]);
        let a = budget_repair(&[0, 0, 0], &w(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]), 1).unwrap();
        assert_eq!(a.counts(), &[1, 0, 0]);
    }

    #[test]
    fn repaired_residual_is_bounded() {
        let mut rng = seeded(3);
        let p = w(&[0.11, 0.23, 0.07, 0.29, 0.3]);
        for budget in [1, 3, 7, 20] {
            for _ in 0..200 {
                let q = probabilistic_quantize(&p, budget, &mut rng).unwrap();
                assert_eq!(q.allocation.counts().iter().sum::<usize>(), budget);
                assert!(q.residual.max_abs() <= 2.0 / budget as f64 + 1e-12);
                assert!(q.raw_residual.max_abs() < 1.0 / budget as f64);
                assert!(q.residual.0.iter().sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quantized_matrix_matches_grid_design() {
        let rows = DesignRows::new(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.6, 0.8])).unwrap();
        let alloc = SampleAllocation::new(vec![1, 2, 1]).unwrap();
        let a_hat = quantized_information_matrix(&rows, &alloc).unwrap();
        let a = super::super::information_matrix(&rows, &w(&[0.25, 0.5, 0.25])).unwrap();
        assert!((a_hat.matrix() - a.matrix()).amax() < 1e-15);
    }

    #[test]
    fn concentrated_allocation_is_singular() {
        let rows = DesignRows::new(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.6, 0.8])).unwrap();
        let alloc = SampleAllocation::new(vec![0, 5, 0]).unwrap();
        assert!(matches!(quantized_information_matrix(&rows, &alloc), Err(Error::SingularInformationMatrix { .. })));
    }

    #[test]
    fn exact_variance_of_rounding() {
        assert!((two_point_variance(0.25, 10) - 0.0025).abs() < 1e-15);
        assert!(two_point_variance(0.3, 10) < 1e-15);
        assert!(two_point_variance(0.5, 4) < 1e-15);
        let mut rng = seeded(4);
        let v = empirical_residual_variance(&w(&[0.25, 0.75]), 10, 50_000, &mut rng).unwrap();
        assert!((v[0] - 0.0025).abs() < 0.0025 * 0.05, "{v:?}");
    }

    #[test]
    fn empty_budget_is_rejected() {
        let mut rng = seeded(5);
        assert!(probabilistic_quantize(&w(&[1.0]), 0, &mut rng).is_err());
        assert!(SampleAllocation::new(vec![0, 0]).is_err());
    }
}

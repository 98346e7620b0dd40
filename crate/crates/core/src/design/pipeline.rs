//! End-to-end design: relaxed solve, quantization, invertibility repair.

use rand::Rng;
use serde::Serialize;

use super::quantize::{probabilistic_quantize, Quantization, SampleAllocation};
use super::solver::{solve_relaxed, RelaxedSolution, SolverOptions};
use super::{criterion_of_matrix, information_matrix, invertibility_probability_bound, weighted_gram};
use super::{Criterion, DesignWeights};
use crate::error::{invalid, Error, Result};
use crate::linalg::require_invertible;
use crate::rng::seeded;
use crate::spectral::{DesignRows, SpectralBasis};

/// A quantized allocation that is guaranteed to give an invertible
/// information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDesign {
    pub allocation: SampleAllocation,
    /// The draw before any invertibility fallback.
    pub quantization: Quantization,
    pub objective: f64,
    pub fallback_steps: usize,
}

/// Quantizes `weights` to `budget` samples. If the quantized design is
/// singular, moves one sample at a time from the largest quota (`m_j > 1`)
/// to the unsampled node of largest weight, at most `K` times.
pub fn quantize_design<R: Rng + ?Sized>(
    rows: &DesignRows,
    weights: &DesignWeights,
    budget: usize,
    c: Criterion,
    rng: &mut R,
) -> Result<QuantizedDesign> {
    let quantization = probabilistic_quantize(weights, budget, rng)?;
    let mut counts = quantization.allocation.counts().to_vec();
    let p = weights.as_slice();
    let m = budget as f64;
    for step in 0..=rows.k() {
        let props: Vec<f64> = counts.iter().map(|&x| x as f64 / m).collect();
        let a_hat = weighted_gram(rows, &props)?;
        if require_invertible(&a_hat).is_ok() {
            return Ok(QuantizedDesign {
                allocation: SampleAllocation::new(counts)?,
                objective: criterion_of_matrix(&a_hat, c)?,
                quantization,
                fallback_steps: step,
            });
        }
        if step == rows.k() {
            break;
        }
        let mut gain: Option<usize> = None;
        for i in (0..counts.len()).filter(|&i| counts[i] == 0) {
            if gain.is_none_or(|g| p[i] > p[g]) {
                gain = Some(i);
            }
        }
        let mut lose: Option<usize> = None;
        for j in (0..counts.len()).filter(|&j| counts[j] > 1) {
            if lose.is_none_or(|l| counts[j] > counts[l]) {
                lose = Some(j);
            }
        }
        match (gain, lose) {
            (Some(i), Some(j)) => {
                counts[i] += 1;
                counts[j] -= 1;
            }
            _ => return Err(Error::FallbackExhausted { steps: step }),
        }
    }
    Err(Error::FallbackExhausted { steps: rows.k() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignDiagnostics {
    pub criterion: Criterion,
    pub bandwidth: usize,
    pub budget: usize,
    pub relaxed_objective: f64,
    pub quantized_objective: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Smallest eigenvalue of the relaxed information matrix.
    pub sigma_min: f64,
    /// Closed-form lower bound on the probability that quantization keeps
    /// the design invertible.
    pub invertibility_bound: f64,
    pub fallback_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignOutcome {
    pub relaxed: RelaxedSolution,
    pub design: QuantizedDesign,
    pub diagnostics: DesignDiagnostics,
}

/// Bandwidth-`k` design with `budget` samples: solve, quantize (seeded),
/// repair.
pub fn design_pipeline(
    basis: &SpectralBasis,
    k: usize,
    budget: usize,
    c: Criterion,
    seed: u64,
    opts: &SolverOptions,
) -> Result<DesignOutcome> {
    if budget < k {
        return Err(invalid(format!("budget {budget} is below the bandwidth {k}")));
    }
    let rows = basis.design_rows(k)?;
    let relaxed = solve_relaxed(&rows, c, opts)?;
    let mut rng = seeded(seed);
    let design = quantize_design(&rows, &relaxed.weights, budget, c, &mut rng)?;
    let sigma_min = information_matrix(&rows, &relaxed.weights)?.sigma_min();
    let diagnostics = DesignDiagnostics {
        criterion: c,
        bandwidth: k,
        budget,
        relaxed_objective: relaxed.objective,
        quantized_objective: design.objective,
        duality_gap: relaxed.gap,
        iterations: relaxed.iterations,
        converged: relaxed.converged,
        sigma_min,
        invertibility_bound: invertibility_probability_bound(sigma_min.max(f64::MIN_POSITIVE), budget, rows.n())?,
        fallback_steps: design.fallback_steps,
    };
    Ok(DesignOutcome { relaxed, design, diagnostics })
}

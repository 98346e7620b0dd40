//! First-order solvers for the relaxed design problem.
//!
//! A- and D-optimality use Frank-Wolfe with away steps, which converges
//! linearly on these smooth, strongly-convex-on-the-support objectives and
//! yields the simplex duality gap as a stopping certificate. E-optimality is
//! nonsmooth and uses projected subgradient descent with diminishing steps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{criterion_of_matrix, gap_from_gradient, gradient_at, weighted_gram, Criterion, DesignWeights};
use crate::error::{invalid, Result};
use crate::spectral::DesignRows;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Frank-Wolfe iteration cap (A and D).
    pub max_iter: usize,
    /// Stop once the duality gap is at most this.
    pub tol: f64,
    /// Projected-subgradient iteration count (E).
    pub subgradient_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iter: 50_000, tol: 1e-6, subgradient_iters: 3_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxedSolution {
    pub weights: DesignWeights,
    pub objective: f64,
    /// Duality gap at `weights`; for E-optimality computed from a
    /// subgradient and therefore only indicative.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes the criterion over the probability simplex, starting from
/// the uniform design.
pub fn solve_relaxed(rows: &DesignRows, c: Criterion, opts: &SolverOptions) -> Result<RelaxedSolution> {
    if rows.n() < rows.k() {
        return Err(invalid(format!("need at least K={} candidate rows, got {}", rows.k(), rows.n())));
    }
    match c {
        Criterion::AOpt | Criterion::DOpt => frank_wolfe(rows, c, opts),
        Criterion::EOpt => projected_subgradient(rows, opts),
    }
}

fn frank_wolfe(rows: &DesignRows, c: Criterion, opts: &SolverOptions) -> Result<RelaxedSolution> {
    let n = rows.n();
    let k = rows.k() as f64;
    let mut p = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    loop {
        let a = weighted_gram(rows, &p)?;
        let g = gradient_at(rows, &a, c)?;
        let gap = gap_from_gradient(&p, &g);
        if gap <= opts.tol || iterations >= opts.max_iter {
            let objective = criterion_of_matrix(&a, c)?;
            return Ok(RelaxedSolution {
                weights: DesignWeights(p),
                objective,
                gap,
                iterations,
                converged: gap <= opts.tol,
            });
        }
        iterations += 1;

        let pg: f64 = p.iter().zip(g.iter()).map(|(x, y)| x * y).sum();
        let toward = argmin(&g);
        let away = argmax_on_support(&g, &p);
        let (j, lo, hi) = if gap >= g[away] - pg || p[away] >= 1.0 {
            (toward, 0.0, 1.0)
        } else {
            (away, -p[away] / (1.0 - p[away]), 0.0)
        };

        let u = rows.row(j).transpose();
        let step = match c {
            Criterion::DOpt => d_opt_step(-g[j], k, lo, hi),
            _ => a_opt_step(&a, &u, lo, hi)?,
        };
        if step == 0.0 {
            // Line search found no progress along the chosen direction;
            // the gap is already at rounding level.
            let objective = criterion_of_matrix(&a, c)?;
            return Ok(RelaxedSolution { weights: DesignWeights(p), objective, gap, iterations, converged: false });
        }
        for x in p.iter_mut() {
            *x *= 1.0 - step;
        }
        p[j] += step;
        if step == lo {
            p[j] = 0.0;
        }
        normalize(&mut p);
    }
}

/// Exact line search for `-log det((1-s) A + s u u^T)` with
/// `d = u^T A^{-1} u`: the stationary point is `s = (d - K) / (K (d - 1))`.
fn d_opt_step(d: f64, k: f64, lo: f64, hi: f64) -> f64 {
    if d > 1.0 {
        ((d - k) / (k * (d - 1.0))).clamp(lo, hi)
    } else if lo < 0.0 {
        // Away from a row with d <= 1 the objective decreases all the way
        // to the boundary.
        lo
    } else {
        0.0
    }
}

/// Exact line search for `tr(((1-s) A + s u u^T)^{-1})`.
///
/// With `t = s/(1-s)`, Sherman-Morrison gives
/// `f = (1+t) (T - t b / (1 + t d))` where `T = tr A^{-1}`,
/// `d = u^T A^{-1} u` and `b = u^T A^{-2} u`. `f` is convex in `s`, and
/// the sign of `df/ds` is that of `T (1+td)^2 - b (1 + 2t + t^2 d)`, which
/// is bisected.
fn a_opt_step(a: &DMatrix<f64>, u: &DVector<f64>, lo: f64, hi: f64) -> Result<f64> {
    let a_inv = a.clone().cholesky().ok_or(crate::Error::SingularInformationMatrix { sigma_min: 0.0 })?.inverse();
    let au = &a_inv * u;
    let (tr, d, b) = (a_inv.trace(), u.dot(&au), au.norm_squared());
    let slope = |s: f64| {
        let t = s / (1.0 - s);
        let q = 1.0 + t * d;
        tr * q * q - b * (1.0 + 2.0 * t + t * t * d)
    };
    let (mut l, mut h) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (l + h);
        if mid <= l || mid >= h {
            break;
        }
        if slope(mid) > 0.0 {
            h = mid;
        } else {
            l = mid;
        }
    }
    let s = 0.5 * (l + h);
    let span = (hi - lo) * 1e-12;
    if s - lo <= span && lo < 0.0 && 1.0 + (lo / (1.0 - lo)) * d > 1e-12 {
        return Ok(lo);
    }
    if hi - s <= span && hi == 1.0 {
        // Only a full move onto the vertex can be optimal here, which
        // keeps A invertible just when K = 1.
        return Ok(if a.nrows() == 1 && d > 0.0 { 1.0 } else { s });
    }
    Ok(s)
}

fn projected_subgradient(rows: &DesignRows, opts: &SolverOptions) -> Result<RelaxedSolution> {
    let n = rows.n();
    let mut p = vec![1.0 / n as f64; n];
    let a0 = weighted_gram(rows, &p)?;
    let mut best = p.clone();
    let mut best_obj = criterion_of_matrix(&a0, Criterion::EOpt)?;
    let mut best_grad = gradient_at(rows, &a0, Criterion::EOpt)?;
    let mut grad = best_grad.clone();
    let radius = 1.0 / (n as f64).sqrt();
    for t in 0..opts.subgradient_iters {
        let gnorm = grad.norm();
        if gnorm == 0.0 {
            break;
        }
        let mut step = radius / ((t + 1) as f64).sqrt() / gnorm;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = p.iter().zip(grad.iter()).map(|(x, g)| x - step * g).collect();
            let q = project_simplex(&trial);
            let a = weighted_gram(rows, &q)?;
            if let Ok(obj) = criterion_of_matrix(&a, Criterion::EOpt) {
                accepted = Some((q, a, obj));
                break;
            }
            step *= 0.5;
        }
        let Some((q, a, obj)) = accepted else { break };
        p = q;
        grad = gradient_at(rows, &a, Criterion::EOpt)?;
        if obj < best_obj {
            best_obj = obj;
            best = p.clone();
            best_grad = grad.clone();
        }
    }
    let gap = gap_from_gradient(&best, &best_grad);
    Ok(RelaxedSolution {
        weights: DesignWeights(best),
        objective: best_obj,
        gap,
        iterations: opts.subgradient_iters,
        converged: false,
    })
}

/// Euclidean projection onto the probability simplex by sorting and
/// thresholding.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (idx, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let candidate = (cumsum - 1.0) / (idx + 1) as f64;
        if x - candidate > 0.0 {
            theta = candidate;
        }
    }
    let mut p: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    normalize(&mut p);
    p
}

fn normalize(p: &mut [f64]) {
    for x in p.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    for x in p.iter_mut() {
        *x /= s;
    }
}

/// Lowest index attaining the minimum.
fn argmin(g: &DVector<f64>) -> usize {
    let mut best = 0;
    for (i, &x) in g.iter().enumerate() {
        if x < g[best] {
            best = i;
        }
    }
    best
}

/// Lowest index attaining the maximum among `p_i > 0`.
fn argmax_on_support(g: &DVector<f64>, p: &[f64]) -> usize {
    let mut best = None;
    for (i, &x) in g.iter().enumerate() {
        if p[i] > 0.0 && best.is_none_or(|b: usize| x > g[b]) {
            best = Some(i);
        }
    }
    best.unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{criterion_value, duality_gap, information_matrix};

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.3, 0.3, 0.6]);
        assert!((p[0] - 0.2333333333333333).abs() < 1e-12);
        assert!((p[2] - 0.5333333333333333).abs() < 1e-12);
        let p = project_simplex(&[-1.0, -1.0, -1.0]);
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn constant_rows_stay_uniform() {
        let rows = DesignRows::new(DMatrix::from_element(6, 1, 6f64.sqrt().recip())).unwrap();
        for c in [Criterion::AOpt, Criterion::DOpt] {
            let sol = solve_relaxed(&rows, c, &SolverOptions::default()).unwrap();
            assert_eq!(sol.weights, DesignWeights::uniform(6));
            assert!(sol.converged);
            assert_eq!(sol.iterations, 0);
        }
    }

    #[test]
    fn standard_basis_a_opt_is_balanced() {
        let rows = DesignRows::new(DMatrix::identity(2, 2)).unwrap();
        let sol = solve_relaxed(&rows, Criterion::AOpt, &SolverOptions::default()).unwrap();
        assert!((sol.weights.as_slice()[0] - 0.5).abs() < 1e-12);
        assert!((sol.objective - 4.0).abs() < 1e-12);
    }

    #[test]
    fn unbalanced_rows_converge_with_certificate() {
        // Rows e1, e2, e1 + e2: both criteria favour spreading mass.
        let rows = DesignRows::new(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.6, 0.8])).unwrap();
        for c in [Criterion::AOpt, Criterion::DOpt] {
            let sol = solve_relaxed(&rows, c, &SolverOptions::default()).unwrap();
            assert!(sol.converged, "{c}: gap {}", sol.gap);
            let gap = duality_gap(&rows, &sol.weights, c).unwrap();
            assert!((-1e-12..=1e-6).contains(&gap));
            let uniform = criterion_value(&information_matrix(&rows, &DesignWeights::uniform(3)).unwrap(), c).unwrap();
            assert!(sol.objective <= uniform);
        }
    }

    #[test]
    fn d_opt_step_formula() {
        // d = K: already optimal along this direction.
        assert_eq!(d_opt_step(3.0, 3.0, 0.0, 1.0), 0.0);
        assert!((d_opt_step(5.0, 2.0, 0.0, 1.0) - 3.0 / 8.0).abs() < 1e-15);
        assert_eq!(d_opt_step(0.5, 2.0, -0.25, 0.0), -0.25);
    }

    #[test]
    fn e_opt_improves_on_uniform() {
        let rows = DesignRows::new(DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.9, 0.1, 0.8, 0.2, 0.0, 1.0])).unwrap();
        let sol = solve_relaxed(&rows, Criterion::EOpt, &SolverOptions::default()).unwrap();
        let uniform =
            criterion_value(&information_matrix(&rows, &DesignWeights::uniform(4)).unwrap(), Criterion::EOpt).unwrap();
        assert!(sol.objective < uniform);
        // The optimum puts half the mass on each axis: lambda_min = 1/2.
        assert!(sol.objective < 2.05, "{}", sol.objective);
    }

    #[test]
    fn too_few_rows() {
        let rows = DesignRows::new(DMatrix::identity(1, 2)).unwrap();
        assert!(solve_relaxed(&rows, Criterion::AOpt, &SolverOptions::default()).is_err());
    }
}

//! Distinct-node sampling sets used as comparison points.
//!
//! * [`greedy_sigma_min`]: grow the set one node at a time, maximizing the
//!   smallest singular value of the selected rows of `V_K`.
//! * [`top_m_selection`]: take the `M` nodes with the largest relaxed
//!   design weight, one sample each.

use nalgebra::DMatrix;

use crate::design::DesignWeights;
use crate::error::{invalid, Result};
use crate::estimation::SamplingSequence;
use crate::linalg::symmetric_eigenvalues;
use crate::spectral::DesignRows;

/// Greedy smallest-singular-value selection of `m` distinct nodes.
///
/// While fewer than `K` nodes are chosen, a candidate set of `t` nodes is
/// scored by the smallest singular value of its `t x t` block on the first
/// `t` columns; from then on by that of the full `t x K` block. Ties go to
/// the lowest node index. Returns the nodes sorted ascending.
pub fn greedy_sigma_min(rows: &DesignRows, m: usize) -> Result<SamplingSequence> {
    let n = rows.n();
    let k = rows.k();
    if m == 0 || m > n {
        return Err(invalid(format!("cannot select {m} distinct nodes out of {n}")));
    }
    let v = rows.matrix();
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    let mut taken = vec![false; n];
    let mut gram = DMatrix::<f64>::zeros(k, k);
    while chosen.len() < m {
        let t = chosen.len() + 1;
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            let score = if t <= k {
                let cols = t;
                let block = DMatrix::from_fn(t, cols, |r, c| {
                    let node = if r < chosen.len() { chosen[r] } else { i };
                    v[(node, c)]
                });
                smallest_singular_value(block)
            } else {
                let u = v.row(i);
                let g = &gram + u.transpose() * u;
                symmetric_eigenvalues(&g)[0].max(0.0).sqrt()
            };
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let (pick, _) = best.expect("m <= n leaves a candidate");
        taken[pick] = true;
        chosen.push(pick);
        let u = v.row(pick);
        gram += u.transpose() * u;
    }
    chosen.sort_unstable();
    SamplingSequence::new(chosen, n)
}

fn smallest_singular_value(block: DMatrix<f64>) -> f64 {
    block.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// The `m` nodes of largest weight, ties to the lowest index, sorted
/// ascending.
pub fn top_m_selection(p: &DesignWeights, m: usize) -> Result<SamplingSequence> {
    let n = p.len();
    if m == 0 || m > n {
        return Err(invalid(format!("cannot select {m} distinct nodes out of {n}")));
    }
    let w = p.as_slice();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let mut picked = order[..m].to_vec();
    picked.sort_unstable();
    SamplingSequence::new(picked, n)
}

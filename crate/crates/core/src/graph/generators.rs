//! Seeded random graph models.

use std::collections::BTreeSet;

use rand::Rng;

use super::{Edge, WeightedGraph};
use crate::error::{invalid, Error, Result};
use crate::rng::{substream, tag};

/// Regeneration attempts before a generator gives up on connectivity.
pub const MAX_CONNECT_ATTEMPTS: usize = 100;

/// Watts-Strogatz small-world graph with unit weights.
///
/// Starts from a ring lattice where node `u` links to `u+1..=u+k`, then
/// rewires the far endpoint of every lattice edge with probability `beta`
/// to a uniformly chosen node that is neither `u` nor already adjacent.
/// Edge count stays `n * k`.
pub fn watts_strogatz(n: usize, k: usize, beta: f64, seed: u64) -> Result<WeightedGraph> {
    if k < 1 || n <= 2 * k {
        return Err(invalid(format!("watts_strogatz requires n > 2k >= 2 (n={n}, k={k})")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(invalid(format!("rewiring probability {beta} outside [0, 1]")));
    }
    for attempt in 0..MAX_CONNECT_ATTEMPTS {
        let mut rng = substream(seed, tag::GRAPH, attempt as u64, 0);
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for u in 0..n {
            for off in 1..=k {
                let v = (u + off) % n;
                adj[u].insert(v);
                adj[v].insert(u);
            }
        }
        for off in 1..=k {
            for u in 0..n {
                if rng.random::<f64>() >= beta {
                    continue;
                }
                if adj[u].len() >= n - 1 {
                    continue;
                }
                let v = (u + off) % n;
                let target = loop {
                    let w = rng.random_range(0..n);
                    if w != u && !adj[u].contains(&w) {
                        break w;
                    }
                };
                adj[u].remove(&v);
                adj[v].remove(&u);
                adj[u].insert(target);
                adj[target].insert(u);
            }
        }
        let edges: Vec<Edge> =
            adj.iter().enumerate().flat_map(|(i, nb)| nb.range(i + 1..).map(move |&j| Edge { i, j, w: 1.0 })).collect();
        if super::is_connected(n, edges.iter().map(|e| (e.i, e.j))) {
            return WeightedGraph::new(n, edges);
        }
    }
    Err(Error::Disconnected { attempts: MAX_CONNECT_ATTEMPTS })
}

/// Random geometric graph on the unit square with Gaussian-kernel weights.
///
/// Nodes are uniform in `[0,1]^2`; `i` and `j` are joined when their
/// distance `d <= radius`, with weight `exp(-d^2 / (2 kernel_width^2))`.
pub fn random_geometric(n: usize, radius: f64, kernel_width: f64, seed: u64) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(invalid(format!("random_geometric requires n >= 2 (n={n})")));
    }
    if !(radius > 0.0) || !(kernel_width > 0.0) {
        return Err(invalid("radius and kernel_width must be positive"));
    }
    for attempt in 0..MAX_CONNECT_ATTEMPTS {
        let mut rng = substream(seed, tag::GRAPH, attempt as u64, 1);
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
        let edges = geometric_edges(&pts, radius, kernel_width);
        if super::is_connected(n, edges.iter().map(|e| (e.i, e.j))) {
            return WeightedGraph::new(n, edges);
        }
    }
    Err(Error::Disconnected { attempts: MAX_CONNECT_ATTEMPTS })
}

fn geometric_edges(pts: &[(f64, f64)], radius: f64, kernel_width: f64) -> Vec<Edge> {
    let two_theta_sq = 2.0 * kernel_width * kernel_width;
    let mut edges = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
            let d2 = dx * dx + dy * dy;
            if d2.sqrt() <= radius {
                edges.push(Edge { i, j, w: (-d2 / two_theta_sq).exp() });
            }
        }
    }
    edges
}

//! Undirected weighted graphs and their combinatorial Laplacians.

mod generators;
mod io;

pub use generators::{random_geometric, watts_strogatz, MAX_CONNECT_ATTEMPTS};
pub use io::{load_edge_list, parse_edge_list, save_edge_list, write_edge_list, EDGE_LIST_MAGIC};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Connected, undirected, positively weighted graph without self-loops.
///
/// Edges are kept in canonical form: `i < j`, sorted lexicographically,
/// no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Validates and canonicalizes. Edges may be given in either
    /// orientation.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph must have at least one node".into()));
        }
        let mut canon = Vec::new();
        for e in edges {
            canon.push(check_edge(n, e).map_err(Error::InvalidGraph)?);
        }
        canon.sort_by_key(|e| (e.i, e.j));
        if let Some(w) = canon.windows(2).find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", w[0].i, w[0].j)));
        }
        let g = WeightedGraph { n, edges: canon };
        if !g.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    /// Dense symmetric weight matrix W.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            w[(e.i, e.j)] = e.w;
            w[(e.j, e.i)] = e.w;
        }
        w
    }

    pub fn is_connected(&self) -> bool {
        is_connected(self.n, self.edges.iter().map(|e| (e.i, e.j)))
    }
}

/// Orients an edge as `i < j` and checks range, loop and weight.
fn check_edge(n: usize, e: Edge) -> std::result::Result<Edge, String> {
    if e.i >= n || e.j >= n {
        return Err(format!("node index out of range in edge ({}, {}) for n={n}", e.i, e.j));
    }
    if e.i == e.j {
        return Err(format!("self-loop at node {}", e.i));
    }
    if !(e.w > 0.0) || !e.w.is_finite() {
        return Err(format!("nonpositive weight {} on edge ({}, {})", e.w, e.i, e.j));
    }
    let (i, j) = if e.i < e.j { (e.i, e.j) } else { (e.j, e.i) };
    Ok(Edge { i, j, w: e.w })
}

pub(crate) fn is_connected(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for (i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// Combinatorial Laplacian `L = D - W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian(DMatrix<f64>);

impl Laplacian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// Wraps an arbitrary matrix after checking the Laplacian invariants:
    /// symmetry, zero row sums and nonpositive off-diagonal entries.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let n = m.nrows();
        for i in 0..n {
            let row_sum: f64 = m.row(i).iter().sum();
            if row_sum.abs() > 1e-10 {
                return Err(Error::InvalidGraph(format!("row {i} sums to {row_sum:e}")));
            }
            for j in 0..n {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidGraph(format!("asymmetric at ({i}, {j})")));
                }
                if i != j && m[(i, j)] > 0.0 {
                    return Err(Error::InvalidGraph(format!("positive off-diagonal at ({i}, {j})")));
                }
            }
        }
        Ok(Laplacian(m))
    }
}

pub fn laplacian(g: &WeightedGraph) -> Laplacian {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for e in g.edges() {
        l[(e.i, e.j)] -= e.w;
        l[(e.j, e.i)] -= e.w;
        l[(e.i, e.i)] += e.w;
        l[(e.j, e.j)] += e.w;
    }
    Laplacian(l)
}

//! Edge-list text format.
//!
//! ```text
//! # gsample-graph v1 n=4
//! 0 1 1.0
//! 1 2 0.5
//! 2 3 0.25
//! ```
//!
//! One edge per line as `i j w` with 0-based indices. Other lines starting
//! with `#` are comments.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{check_edge, Edge, WeightedGraph};
use crate::error::{Error, Result};

pub const EDGE_LIST_MAGIC: &str = "# gsample-graph v1";

pub fn write_edge_list<W: Write>(g: &WeightedGraph, mut out: W) -> Result<()> {
    writeln!(out, "{EDGE_LIST_MAGIC} n={}", g.n())?;
    for e in g.edges() {
        writeln!(out, "{} {} {:?}", e.i, e.j, e.w)?;
    }
    Ok(())
}

pub fn save_edge_list(g: &WeightedGraph, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_edge_list(g, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    parse_edge_list(&fs::read_to_string(path)?)
}

pub fn parse_edge_list(text: &str) -> Result<WeightedGraph> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(EDGE_LIST_MAGIC) {
            let count = rest
                .trim()
                .strip_prefix("n=")
                .and_then(|s| s.trim().parse::<usize>().ok())
                .ok_or_else(|| parse_err(line_no, "malformed header, expected `n=<N>`"))?;
            if n.replace(count).is_some() {
                return Err(parse_err(line_no, "duplicate header"));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let n = n.ok_or_else(|| parse_err(line_no, "edge before `# gsample-graph v1 n=<N>` header"))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(line_no, format!("expected `i j w`, found {} field(s)", fields.len())));
        }
        let i = parse_index(fields[0], line_no)?;
        let j = parse_index(fields[1], line_no)?;
        let w: f64 = fields[2].parse().map_err(|_| parse_err(line_no, format!("invalid weight `{}`", fields[2])))?;
        if i == j {
            return Err(parse_err(line_no, format!("self-loop at line {line_no}")));
        }
        if !(w > 0.0) {
            return Err(parse_err(line_no, format!("nonpositive weight {w}")));
        }
        let e = check_edge(n, Edge { i, j, w }).map_err(|m| parse_err(line_no, m))?;
        edges.push(e);
    }
    let n = n.ok_or_else(|| parse_err(0, "missing `# gsample-graph v1 n=<N>` header"))?;
    WeightedGraph::new(n, edges)
}

fn parse_index(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| parse_err(line, format!("invalid node index `{s}`")))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

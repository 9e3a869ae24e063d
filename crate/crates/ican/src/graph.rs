//! Simple undirected graphs: edge-list I/O, adjacency normalization and
//! degree statistics.
//!
//! Every other module consumes graphs through this representation. Graphs are
//! immutable after construction: node indices are contiguous `0..n`, edges are
//! stored as unordered pairs `(i, j)` with `i < j`, and neighbor lists are
//! precomputed for the simulation and centrality code.

use ndarray::Array2;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty graph: no edges or nodes found")]
    Empty,
    #[error("invalid graph: {0}")]
    Invalid(String),
}

/// Immutable simple undirected graph.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    /// Unordered pairs `(i, j)` with `i < j`, sorted, no duplicates.
    edges: Vec<(u32, u32)>,
    /// Neighbor lists, each sorted ascending.
    adj: Vec<Vec<u32>>,
    /// Original string identifiers of the input file, by node index.
    node_labels: Option<Vec<String>>,
}

impl Graph {
    /// Builds a graph from an edge list. Self-loops and duplicates are
    /// dropped; endpoints must lie in `[0, n)`.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self, GraphError> {
        let mut set: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(GraphError::Invalid(format!(
                    "edge ({a}, {b}) out of range for n = {n}"
                )));
            }
            if a == b {
                continue;
            }
            set.push((a.min(b), a.max(b)));
        }
        set.sort_unstable();
        set.dedup();
        Ok(Self::from_clean_parts(n, set, None))
    }

    fn from_clean_parts(n: usize, edges: Vec<(u32, u32)>, labels: Option<Vec<String>>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph {
            n,
            edges,
            adj,
            node_labels: labels,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn node_labels(&self) -> Option<&[String]> {
        self.node_labels.as_deref()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&(b as u32)).is_ok()
    }

    /// Dense 0/1 adjacency matrix.
    pub fn dense_adjacency(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for &(i, j) in &self.edges {
            a[(i as usize, j as usize)] = 1.0;
            a[(j as usize, i as usize)] = 1.0;
        }
        a
    }

    /// True if every node is reachable from node 0 (false for `n == 0`).
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    count += 1;
                    stack.push(w as usize);
                }
            }
        }
        count == self.n
    }

    /// Serializes as 0-based integer pairs, one per line, sorted.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 8);
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    pub fn save_edge_list(&self, path: &Path) -> Result<(), GraphError> {
        std::fs::write(path, self.to_edge_list_string())?;
        Ok(())
    }
}

/// Parses an edge-list file: one edge per line, whitespace-separated node
/// tokens (arbitrary strings), optional third weight token (parsed and
/// discarded), `#`/`%` comment lines. Node tokens are reindexed contiguously
/// in first-seen order; directed inputs are symmetrized; duplicate edges and
/// self-loops are dropped.
pub fn load_edge_list(path: &Path, _symmetrize: bool) -> Result<Graph, GraphError> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text)
}

fn intern<'t>(index: &mut HashMap<&'t str, u32>, labels: &mut Vec<String>, tok: &'t str) -> u32 {
    if let Some(&i) = index.get(tok) {
        return i;
    }
    let i = labels.len() as u32;
    labels.push(tok.to_string());
    index.insert(tok, i);
    i
}

pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut index: HashMap<&str, u32> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let a = toks.next();
        let b = toks.next();
        let weight = toks.next();
        if toks.next().is_some() {
            return Err(GraphError::Parse {
                line: lineno + 1,
                msg: "more than three tokens".into(),
            });
        }
        let (a, b) = match (a, b) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    msg: "expected two node tokens".into(),
                })
            }
        };
        if let Some(w) = weight {
            // Weights are accepted but ignored; still validate the token.
            if w.parse::<f64>().is_err() {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    msg: format!("weight token `{w}` is not a number"),
                });
            }
        }
        let ia = intern(&mut index, &mut labels, a);
        let ib = intern(&mut index, &mut labels, b);
        if ia == ib {
            continue;
        }
        edges.push((ia.min(ib), ia.max(ib)));
    }
    if labels.is_empty() {
        return Err(GraphError::Empty);
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(Graph::from_clean_parts(labels.len(), edges, Some(labels)))
}

/// Integer degree sequence with first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeStats {
    pub degrees: Vec<usize>,
    /// ⟨k⟩ = (1/n) Σ k_i
    pub mean_k: f64,
    /// ⟨k²⟩ = (1/n) Σ k_i²
    pub mean_k2: f64,
}

pub fn degree_stats(g: &Graph) -> DegreeStats {
    let n = g.node_count();
    assert!(n >= 1, "degree_stats requires n >= 1");
    let degrees: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let sum: u64 = degrees.iter().map(|&d| d as u64).sum();
    let sum2: u64 = degrees.iter().map(|&d| (d * d) as u64).sum();
    DegreeStats {
        degrees,
        mean_k: sum as f64 / n as f64,
        mean_k2: sum2 as f64 / n as f64,
    }
}

/// Symmetrically normalized adjacency Ã = D^(−1/2) (A + I) D^(−1/2), where D
/// is the row-sum diagonal of A + I.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    pub matrix: Array2<f64>,
}

pub fn normalize_adjacency(g: &Graph) -> NormalizedAdjacency {
    let n = g.node_count();
    assert!(n >= 1, "normalize_adjacency requires n >= 1");
    // Row sums of A + I are degree + 1, always positive.
    let inv_sqrt: Vec<f64> = (0..n).map(|v| 1.0 / ((g.degree(v) + 1) as f64).sqrt()).collect();
    let mut m = Array2::zeros((n, n));
    for v in 0..n {
        m[(v, v)] = inv_sqrt[v] * inv_sqrt[v];
    }
    for &(i, j) in g.edges() {
        let (i, j) = (i as usize, j as usize);
        let w = inv_sqrt[i] * inv_sqrt[j];
        m[(i, j)] = w;
        m[(j, i)] = w;
    }
    NormalizedAdjacency { matrix: m }
}

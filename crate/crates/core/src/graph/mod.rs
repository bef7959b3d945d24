//! Undirected simple graphs: representation, family generators, and the
//! structural subroutines (spanning trees, matchings, decompositions) that
//! schedules and strategies are built on.
//!
//! Vertices are `0..n`. Edges are unordered pairs stored with the smaller
//! endpoint first; the edge index is the position in the edge list.

mod enumerate;
mod matching;
mod structure;

pub use enumerate::{connected_graphs_up_to_iso, trees_up_to_iso};
pub use matching::{maximum_matching, perfect_matching, Matching};
pub use structure::{
    basic_graph_layout, classify_for_1fair_adversary, detect_structures, find_l7_partition,
    has_long_cycle, minimal_long_cycle_core, spanning_tree, star_decomposition, GraphClass,
    L7Partition, RootedTree, Star, StarDecomposition, StructureReport,
};

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream, Purpose};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {0} out of range (n = {1})")]
    VertexOutOfRange(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// An undirected simple graph with indexed vertices and edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list, canonicalizing each pair to
    /// `(min, max)` and rejecting loops, duplicates and out-of-range
    /// endpoints.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut canon = Vec::with_capacity(edges.len());
        let mut seen = HashMap::new();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n {
                return Err(GraphError::VertexOutOfRange(a, n));
            }
            if b >= n {
                return Err(GraphError::VertexOutOfRange(b, n));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let e = (a.min(b), a.max(b));
            if seen.insert(e, canon.len()).is_some() {
                return Err(GraphError::DuplicateEdge(e.0, e.1));
            }
            adj[a].push(b);
            adj[b].push(a);
            canon.push(e);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: canon,
            adj,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> (usize, usize) {
        self.edges[idx]
    }

    /// Neighbors of `v` in ascending order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && u < self.n && v < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    /// Index of edge `(u, v)` in the edge list, if present.
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let e = (u.min(v), u.max(v));
        self.edges.iter().position(|&f| f == e)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Subgraph induced by `keep` (distinct vertices), relabeled
    /// `0..keep.len()` in the order given. Returns the subgraph and the
    /// old-id map.
    pub fn induced(&self, keep: &[usize]) -> (Graph, Vec<usize>) {
        let mut index = HashMap::new();
        for (i, &v) in keep.iter().enumerate() {
            assert!(
                index.insert(v, i).is_none(),
                "induced() requires distinct vertices"
            );
        }
        let mut edges = Vec::new();
        for &(a, b) in &self.edges {
            if let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) {
                edges.push((ia, ib));
            }
        }
        (
            Graph::new(keep.len(), &edges).expect("induced subgraph of a valid graph"),
            keep.to_vec(),
        )
    }

    /// Serializes to the text format: `n m` on the first line, then one
    /// `u v` line per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{} {}\n", u, v));
        }
        out
    }

    /// Parses the text format; `#` starts a comment line.
    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace().map(|tok| {
                tok.parse::<usize>().map_err(|_| GraphError::Parse {
                    line: lineno + 1,
                    msg: format!("expected integer, got {tok:?}"),
                })
            });
            let a = fields.next().ok_or(GraphError::Parse {
                line: lineno + 1,
                msg: "missing field".into(),
            })??;
            let b = fields.next().ok_or(GraphError::Parse {
                line: lineno + 1,
                msg: "missing field".into(),
            })??;
            if fields.next().is_some() {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    msg: "expected exactly two fields".into(),
                });
            }
            if header.is_none() {
                header = Some((a, b));
            } else {
                edges.push((a, b));
            }
        }
        let (n, m) = header.ok_or(GraphError::Parse {
            line: 0,
            msg: "empty graph file".into(),
        })?;
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: 0,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::new(n, &edges)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

/// The graph families used throughout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Path on `n` vertices.
    Line,
    /// Cycle on `n` vertices.
    Cycle,
    /// Star `K_{1,n}`: center 0, `n` leaves `1..=n`.
    Star,
    /// Complete graph on `n` vertices.
    Complete,
    /// `K_3` (ignores `n`).
    K3,
    /// `K_4` (ignores `n`).
    K4,
    /// Two triangles merged on a common edge: 4 vertices, 5 edges, the
    /// shared edge is `(0, 1)` and the triangles are `{0,1,2}` and
    /// `{0,1,3}` (ignores `n`).
    K3Merge,
}

impl Family {
    pub fn generate(self, n: usize) -> Result<Graph, GraphError> {
        match self {
            Family::Line => {
                if n < 1 {
                    return Err(GraphError::InvalidParameter("line requires n >= 1".into()));
                }
                let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
                Graph::new(n, &edges)
            }
            Family::Cycle => {
                if n < 3 {
                    return Err(GraphError::InvalidParameter("cycle requires n >= 3".into()));
                }
                let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
                Graph::new(n, &edges)
            }
            Family::Star => {
                if n < 1 {
                    return Err(GraphError::InvalidParameter(
                        "star requires at least one leaf".into(),
                    ));
                }
                let edges: Vec<_> = (1..=n).map(|i| (0, i)).collect();
                Graph::new(n + 1, &edges)
            }
            Family::Complete => {
                if n < 1 {
                    return Err(GraphError::InvalidParameter(
                        "complete requires n >= 1".into(),
                    ));
                }
                let mut edges = Vec::new();
                for u in 0..n {
                    for v in u + 1..n {
                        edges.push((u, v));
                    }
                }
                Graph::new(n, &edges)
            }
            Family::K3 => Family::Complete.generate(3),
            Family::K4 => Family::Complete.generate(4),
            Family::K3Merge => Graph::new(4, &[(0, 1), (0, 2), (1, 2), (0, 3), (1, 3)]),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "line" => Ok(Family::Line),
            "cycle" => Ok(Family::Cycle),
            "star" => Ok(Family::Star),
            "complete" => Ok(Family::Complete),
            "k3" => Ok(Family::K3),
            "k4" => Ok(Family::K4),
            "k3-merge" => Ok(Family::K3Merge),
            other => Err(GraphError::InvalidParameter(format!(
                "unknown family {other:?} (expected line|cycle|star|complete|k3|k4|k3-merge)"
            ))),
        }
    }
}

/// Samples `G(n, p)`: each of the `n(n-1)/2` vertex pairs is included
/// independently with probability `p`. Pairs are visited in lexicographic
/// order and consume one uniform draw each, so the result is a fixed
/// function of `(n, p, seed)`.
pub fn sample_gnp(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GraphError::InvalidParameter(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    let mut rng = stream(seed, Purpose::Gnp, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, &edges)
}

//! Simple undirected graphs used by the reduction-based instance generators.

use serde::{Deserialize, Serialize};

use super::InstanceError;

/// Simple undirected graph with dense vertex ids `0..n`.
///
/// Self-loops are rejected, duplicate edges collapse, and adjacency lists are
/// kept sorted and symmetric.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphData {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, InstanceError> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(InstanceError::Schema(format!("self-loop at vertex {}", u)));
            }
            if u >= n || v >= n {
                return Err(InstanceError::Schema(format!(
                    "edge ({}, {}) outside vertex range 0..{}",
                    u, v, n
                )));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph { n, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    /// Edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(|l| l.len()).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Parses `{"n": 3, "edges": [[0,1],[1,2]]}`.
    pub fn from_json_str(s: &str) -> Result<Self, InstanceError> {
        let data: GraphData = serde_json::from_str(s)?;
        Graph::new(data.n, &data.edges)
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self, InstanceError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&GraphData {
            n: self.n,
            edges: self.edges(),
        })
        .expect("graph serialization cannot fail")
    }
}

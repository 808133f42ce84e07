//! Unweighted, undirected k-nearest-neighbor graphs.
//!
//! Each node picks its `k` nearest rows by squared Euclidean distance (ties
//! broken by the lower node index), then edges are symmetrized by union.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Self-loops and duplicate
    /// edges are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adjacency })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    /// Sorted neighbor ids of `node`.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Iterates over edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    /// Component id for every node, numbered in order of first appearance.
    pub fn component_ids(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n()];
        let mut stack = Vec::new();
        let mut next = 0;
        for start in 0..self.n() {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &w in &self.adjacency[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Builds the union-symmetrized k-NN graph over the rows of `z`.
pub fn build_knn_graph(z: &FeatureMatrix, k: usize) -> Result<Graph> {
    let n = z.n();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "k-NN graph needs at least 2 nodes, got {n}"
        )));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={}",
            n - 1
        )));
    }
    let values = z.values().as_standard_layout();
    let d = z.dim();
    let flat = values.as_slice().expect("standard layout");
    let row = |i: usize| &flat[i * d..(i + 1) * d];

    let directed: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut candidates: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(row(i), row(j)), j))
                .collect();
            let by_distance =
                |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < candidates.len() {
                candidates.select_nth_unstable_by(k - 1, by_distance);
                candidates.truncate(k);
            }
            candidates.into_iter().map(|(_, j)| j).collect()
        })
        .collect();

    let mut adjacency = vec![Vec::with_capacity(k); n];
    for (i, list) in directed.iter().enumerate() {
        for &j in list {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }
    Ok(Graph { adjacency })
}

/// Degree statistics and connected components of a graph.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GraphReport {
    pub nodes: usize,
    pub edges: usize,
    pub degree_min: usize,
    pub degree_mean: f64,
    pub degree_max: usize,
    /// Component sizes, largest first.
    pub component_sizes: Vec<usize>,
}

impl GraphReport {
    pub fn component_count(&self) -> usize {
        self.component_sizes.len()
    }
}

impl std::fmt::Display for GraphReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "nodes={} edges={} degree min/mean/max={}/{:.3}/{} components={}",
            self.nodes,
            self.edges,
            self.degree_min,
            self.degree_mean,
            self.degree_max,
            self.component_count()
        )?;
        if self.component_count() > 1 {
            write!(f, " sizes={:?}", self.component_sizes)?;
        }
        Ok(())
    }
}

pub fn graph_diagnostics(g: &Graph) -> GraphReport {
    let degrees: Vec<usize> = (0..g.n()).map(|i| g.degree(i)).collect();
    let comp = g.component_ids();
    let count = comp.iter().max().map_or(0, |m| m + 1);
    let mut component_sizes = vec![0; count];
    for c in comp {
        component_sizes[c] += 1;
    }
    component_sizes.sort_unstable_by(|a, b| b.cmp(a));
    GraphReport {
        nodes: g.n(),
        edges: g.edge_count(),
        degree_min: degrees.iter().copied().min().unwrap_or(0),
        degree_mean: if g.n() == 0 {
            0.0
        } else {
            degrees.iter().sum::<usize>() as f64 / g.n() as f64
        },
        degree_max: degrees.iter().copied().max().unwrap_or(0),
        component_sizes,
    }
}

//! Undirected circuit graph with edge multiplicities.
//!
//! Blocks become vertices; every net contributes one driver-sink edge per
//! sink (star expansion), and parallel contributions accumulate into the
//! edge multiplicity. Self-loops never occur (a net's sinks exclude its
//! driver block).

use crate::pack::BlockNetlist;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct CircuitGraph {
    pub vertex_count: usize,
    /// Canonicalized edge list: u < v, multiplicity >= 1, sorted.
    pub edges: Vec<(usize, usize, u32)>,
    /// Per-vertex adjacency: (neighbor, multiplicity).
    pub adjacency: Vec<Vec<(usize, u32)>>,
}

impl CircuitGraph {
    /// Build a graph directly from an edge list (test and fixture entry point).
    /// Parallel and reversed duplicates accumulate; self-loops are rejected.
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize, u32)]) -> Self {
        let mut acc: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for &(u, v, m) in edges {
            assert!(u != v, "self-loop {u}");
            assert!(u < vertex_count && v < vertex_count, "vertex out of range");
            assert!(m >= 1);
            let key = (u.min(v), u.max(v));
            *acc.entry(key).or_insert(0) += m;
        }
        let edges: Vec<(usize, usize, u32)> =
            acc.into_iter().map(|((u, v), m)| (u, v, m)).collect();
        let mut adjacency = vec![Vec::new(); vertex_count];
        for &(u, v, m) in &edges {
            adjacency[u].push((v, m));
            adjacency[v].push((u, m));
        }
        CircuitGraph {
            vertex_count,
            edges,
            adjacency,
        }
    }

    /// Multiplicity between two vertices (0 when not adjacent).
    pub fn multiplicity(&self, u: usize, v: usize) -> u32 {
        self.adjacency[u]
            .iter()
            .find(|&&(n, _)| n == v)
            .map_or(0, |&(_, m)| m)
    }

    /// Weighted degree of a vertex.
    pub fn weighted_degree(&self, v: usize) -> u64 {
        self.adjacency[v].iter().map(|&(_, m)| m as u64).sum()
    }

    /// Sum of all edge multiplicities.
    pub fn total_multiplicity(&self) -> u64 {
        self.edges.iter().map(|&(_, _, m)| m as u64).sum()
    }
}

/// Star-expand a block netlist into the circuit graph.
pub fn build_graph(blocks: &BlockNetlist) -> CircuitGraph {
    let mut edges = Vec::new();
    for net in &blocks.nets {
        for sink in &net.sinks {
            if sink.block != net.driver.block {
                edges.push((net.driver.block, sink.block, 1));
            }
        }
    }
    CircuitGraph::from_edges(blocks.block_count(), &edges)
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Undirected weighted graph in compressed row form.
///
/// Every edge is stored in both directions with the same weight, neighbor
/// lists are sorted by index, self-loops are never stored and weights lie in
/// `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseGraph {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    weights: Vec<f64>,
}

impl SparseGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            row_offsets: vec![0; n + 1],
            col_indices: vec![],
            weights: vec![],
        }
    }

    /// Builds a graph from undirected edges `(i, j, w)`.
    ///
    /// Either orientation may be given, and an edge may repeat as long as the
    /// weight agrees. Self-loops, out-of-range ids, weights outside `[0, 1]`
    /// and conflicting duplicate weights are contract errors.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::contract(format!(
                    "edge ({i}, {j}) references a node outside 0..{n}"
                )));
            }
            if i == j {
                return Err(Error::contract(format!("self-loop on node {i}")));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::contract(format!(
                    "edge ({i}, {j}) has weight {w} outside [0, 1]"
                )));
            }
            let key = (i.min(j), i.max(j));
            if let Some(&prev) = map.get(&key) {
                if prev != w {
                    return Err(Error::contract(format!(
                        "edge ({i}, {j}) given with weights {prev} and {w}"
                    )));
                }
            }
            map.insert(key, w);
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(i, j), &w) in &map {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        Ok(Self::from_adjacency_lists(adj))
    }

    /// Unit-weight graph from unordered pairs; duplicates collapse.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let edges: Vec<_> = pairs.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        Self::from_edges(n, &edges)
    }

    fn from_adjacency_lists(mut adj: Vec<Vec<(usize, f64)>>) -> Self {
        let n = adj.len();
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut weights = Vec::new();
        row_offsets.push(0);
        for list in adj.iter_mut() {
            list.sort_by_key(|&(j, _)| j);
            for &(j, w) in list.iter() {
                col_indices.push(j);
                weights.push(w);
            }
            row_offsets.push(col_indices.len());
        }
        Self {
            n,
            row_offsets,
            col_indices,
            weights,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.col_indices.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    #[inline]
    pub fn neighbor_weights(&self, i: usize) -> &[f64] {
        &self.weights[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.neighbor_weights(i).iter().sum()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let nb = self.neighbors(i);
        nb.binary_search(&j)
            .ok()
            .map(|k| self.weights[self.row_offsets[i] + k])
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Undirected edges `(i, j, w)` with `i < j`, in row order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for i in 0..self.n {
            for (&j, &w) in self.neighbors(i).iter().zip(self.neighbor_weights(i)) {
                if i < j {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Both orientations of every edge, in row order.
    pub fn directed_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.col_indices.len());
        for i in 0..self.n {
            for &j in self.neighbors(i) {
                out.push((i, j));
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (&j, &w) in self.neighbors(i).iter().zip(self.neighbor_weights(i)) {
                a[(i, j)] = w;
            }
        }
        a
    }

    /// Same structure with every weight replaced by `f(i, j, w)`.
    pub fn map_weights(&self, f: impl Fn(usize, usize, f64) -> f64) -> Result<Self> {
        let edges: Vec<_> = self.edges().into_iter().map(|(i, j, w)| (i, j, f(i, j, w))).collect();
        Self::from_edges(self.n, &edges)
    }

    /// Component id for every node, numbered in order of first appearance.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn num_components(&self) -> usize {
        self.components().iter().max().map_or(0, |m| m + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.num_components() <= 1
    }

    pub fn ensure_connected(&self) -> Result<()> {
        match self.num_components() {
            0 | 1 => Ok(()),
            components => Err(Error::Connectivity { components }),
        }
    }
}

//! Canonical in-memory graph representation: CSR adjacency over an
//! undirected simple graph, per-node class labels, and a dense feature
//! matrix. Immutable after construction.

pub mod io;

pub use io::{load_dataset, save_dataset, DatasetMeta, GeneratorMeta};

use crate::error::{Error, Result};
use crate::kernels::DenseMatrix;

/// Compressed sparse row adjacency. Rows are sorted; `edge_values` is only
/// populated by the normalized operator.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrAdjacency {
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub edge_values: Option<Vec<f64>>,
}

impl CsrAdjacency {
    pub fn num_rows(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    /// Column indices of row `v` (the neighbors of node v).
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[v]..self.row_offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row_offsets[v + 1] - self.row_offsets[v]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub adjacency: CsrAdjacency,
    pub labels: Vec<usize>,
    pub features: DenseMatrix,
}

impl Graph {
    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Undirected edge count (each edge stored in both rows).
    pub fn num_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    /// Edges as (u, v) with u < v, in row order.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_nodes {
            for &v in self.adjacency.neighbors(u) {
                if u < v {
                    edges.push((u, v));
                }
            }
        }
        edges
    }
}

/// Disjoint train/val/test node index sets; indices sorted ascending.
/// Nodes in none of the three sets are unlabeled bystanders.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SplitMasks {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitMasks {
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = vec![false; num_nodes];
        for (name, set) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &v in set {
                if v >= num_nodes {
                    return Err(Error::IndexOutOfRange {
                        node: v,
                        num_nodes,
                    });
                }
                if seen[v] {
                    return Err(Error::DimensionMismatch(format!(
                        "node {v} appears in more than one split (last seen in {name})"
                    )));
                }
                seen[v] = true;
            }
        }
        Ok(())
    }
}

/// Builds a validated undirected simple graph from an edge list.
///
/// Both directions of every edge are inserted; self-loops and duplicates
/// (in either orientation) are rejected.
pub fn build_graph(
    edges: &[(usize, usize)],
    num_classes: usize,
    labels: Vec<usize>,
    features: DenseMatrix,
) -> Result<Graph> {
    let num_nodes = labels.len();
    if features.rows() != num_nodes {
        return Err(Error::DimensionMismatch(format!(
            "feature rows {} != node count {num_nodes}",
            features.rows()
        )));
    }
    for (&label, node) in labels.iter().zip(0..) {
        if label >= num_classes {
            return Err(Error::DimensionMismatch(format!(
                "label {label} of node {node} >= num_classes {num_classes}"
            )));
        }
    }

    let mut degree = vec![0usize; num_nodes];
    for &(u, v) in edges {
        for node in [u, v] {
            if node >= num_nodes {
                return Err(Error::IndexOutOfRange { node, num_nodes });
            }
        }
        if u == v {
            return Err(Error::SelfLoop { node: u });
        }
        degree[u] += 1;
        degree[v] += 1;
    }

    let mut row_offsets = vec![0usize; num_nodes + 1];
    for v in 0..num_nodes {
        row_offsets[v + 1] = row_offsets[v] + degree[v];
    }
    let mut col_indices = vec![0usize; row_offsets[num_nodes]];
    let mut cursor = row_offsets.clone();
    for &(u, v) in edges {
        col_indices[cursor[u]] = v;
        cursor[u] += 1;
        col_indices[cursor[v]] = u;
        cursor[v] += 1;
    }
    for v in 0..num_nodes {
        let row = &mut col_indices[row_offsets[v]..row_offsets[v + 1]];
        row.sort_unstable();
        for pair in row.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateEdge {
                    u: v.min(pair[0]),
                    v: v.max(pair[0]),
                });
            }
        }
    }

    Ok(Graph {
        num_nodes,
        num_classes,
        adjacency: CsrAdjacency {
            row_offsets,
            col_indices,
            edge_values: None,
        },
        labels,
        features,
    })
}

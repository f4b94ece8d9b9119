//! Normalized adjacency operator and the sparse-dense product.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::CsrAdjacency;
use crate::kernels::DenseMatrix;

/// Symmetrically normalized adjacency with self-loops: for every entry
/// (u, v) of A + I the value is 1/sqrt(d_u * d_v) where d is the degree in
/// A + I. Every node gains a self-loop, so isolated nodes map to a single
/// diagonal entry of 1.
pub fn normalize_adjacency(adjacency: &CsrAdjacency) -> CsrAdjacency {
    let n = adjacency.num_rows();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|v| 1.0 / ((adjacency.degree(v) + 1) as f64).sqrt())
        .collect();

    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(adjacency.nnz() + n);
    let mut values = Vec::with_capacity(adjacency.nnz() + n);
    row_offsets.push(0);
    for u in 0..n {
        let mut self_loop_written = false;
        for &v in adjacency.neighbors(u) {
            if !self_loop_written && v > u {
                col_indices.push(u);
                values.push(inv_sqrt[u] * inv_sqrt[u]);
                self_loop_written = true;
            }
            col_indices.push(v);
            values.push(inv_sqrt[u] * inv_sqrt[v]);
        }
        if !self_loop_written {
            col_indices.push(u);
            values.push(inv_sqrt[u] * inv_sqrt[u]);
        }
        row_offsets.push(col_indices.len());
    }

    CsrAdjacency {
        row_offsets,
        col_indices,
        edge_values: Some(values),
    }
}

/// Sparse-dense product: out = A * X. Missing edge values count as 1.
pub fn spmm(adjacency: &CsrAdjacency, x: &DenseMatrix) -> Result<DenseMatrix> {
    let n = adjacency.num_rows();
    if x.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "spmm: operator has {n} columns, matrix has {} rows",
            x.rows()
        )));
    }
    let cols = x.cols();
    let mut out = DenseMatrix::zeros(n, cols);
    let values = adjacency.edge_values.as_deref();
    out.data_mut()
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(u, out_row)| {
            let start = adjacency.row_offsets[u];
            let end = adjacency.row_offsets[u + 1];
            for idx in start..end {
                let v = adjacency.col_indices[idx];
                let w = values.map_or(1.0, |vals| vals[idx]);
                let x_row = x.row(v);
                for (o, xv) in out_row.iter_mut().zip(x_row) {
                    *o = w.mul_add(*xv, *o);
                }
            }
        });
    Ok(out)
}

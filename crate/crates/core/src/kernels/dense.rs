//! Row-major dense f64 matrices and the matrix products the model needs.
//!
//! The products are register-blocked (4 rows x 16 columns of accumulators)
//! and rely on FMA autovectorization; at the experiment scale
//! (2800x1433 times 1433x128) this is what keeps a full training sweep
//! tractable on one core. Rows of the output are computed independently and
//! in a fixed order, so results are bit-identical for any thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

const MR: usize = 4;
const NR: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// 1 x n row vector.
    pub fn row_vector(data: Vec<f64>) -> Self {
        Self {
            rows: 1,
            cols: data.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(Error::DimensionMismatch(format!(
                "hadamard {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// Adds `bias[j]` to every entry of column j.
    pub fn add_bias_row(&mut self, bias: &[f64]) {
        debug_assert_eq!(bias.len(), self.cols);
        for row in self.data.chunks_exact_mut(self.cols) {
            for (v, b) in row.iter_mut().zip(bias) {
                *v += b;
            }
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn transpose(&self) -> Self {
        const B: usize = 32;
        let (r, c) = (self.rows, self.cols);
        let mut out = vec![0.0; r * c];
        for ib in (0..r).step_by(B) {
            for jb in (0..c).step_by(B) {
                for i in ib..(ib + B).min(r) {
                    for j in jb..(jb + B).min(c) {
                        out[j * r + i] = self.data[i * c + j];
                    }
                }
            }
        }
        Self {
            rows: c,
            cols: r,
            data: out,
        }
    }
}

fn check_inner(label: &str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch(format!(
            "{label}: inner dimensions {left} and {right} differ"
        )));
    }
    Ok(())
}

/// C = A * B.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    check_inner("matmul", a.cols, b.rows)?;
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = DenseMatrix::zeros(m, n);
    c.data
        .par_chunks_mut(MR * n)
        .enumerate()
        .for_each(|(block, c_chunk)| {
            let i0 = block * MR;
            let mr = (m - i0).min(MR);
            gemm_rows(&a.data[i0 * k..(i0 + mr) * k], &b.data, c_chunk, mr, k, n);
        });
    Ok(c)
}

/// C = A^T * B, computed as (B^T * A)^T so the row kernel sees contiguous
/// panels; the strided direct form runs at less than half this speed.
pub fn matmul_at_b(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    check_inner("matmul_at_b", a.rows, b.rows)?;
    let bt = b.transpose();
    let ct = matmul(&bt, a)?;
    Ok(ct.transpose())
}

/// C = A * B^T. Rows of both inputs are contiguous, so this is plain dots.
pub fn matmul_bt(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    check_inner("matmul_bt", a.cols, b.cols)?;
    let (m, k, n) = (a.rows, a.cols, b.rows);
    let mut c = DenseMatrix::zeros(m, n);
    c.data
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, c_row)| {
            let a_row = &a.data[i * k..(i + 1) * k];
            for (j, out) in c_row.iter_mut().enumerate() {
                let b_row = &b.data[j * k..(j + 1) * k];
                let mut acc = 0.0;
                for (x, y) in a_row.iter().zip(b_row) {
                    acc = x.mul_add(*y, acc);
                }
                *out = acc;
            }
        });
    Ok(c)
}

/// Up-to-MR rows of C += A_rows * B, blocked over NR-wide column strips.
fn gemm_rows(a_rows: &[f64], b: &[f64], c: &mut [f64], mr: usize, k: usize, n: usize) {
    let mut j = 0;
    while j + NR <= n {
        match mr {
            MR => kernel_fixed::<MR>(a_rows, b, c, j, k, n),
            3 => kernel_fixed::<3>(a_rows, b, c, j, k, n),
            2 => kernel_fixed::<2>(a_rows, b, c, j, k, n),
            _ => kernel_fixed::<1>(a_rows, b, c, j, k, n),
        }
        j += NR;
    }
    if j < n {
        for r in 0..mr {
            let a_row = &a_rows[r * k..(r + 1) * k];
            let c_row = &mut c[r * n + j..(r + 1) * n];
            for (p, &av) in a_row.iter().enumerate() {
                let b_row = &b[p * n + j..p * n + n];
                for (cv, bv) in c_row.iter_mut().zip(b_row) {
                    *cv = av.mul_add(*bv, *cv);
                }
            }
        }
    }
}

/// R x NR register tile: C[r][j..j+NR] += sum_p A[r][p] * B[p][j..j+NR].
#[inline]
fn kernel_fixed<const R: usize>(
    a_rows: &[f64],
    b: &[f64],
    c: &mut [f64],
    j: usize,
    k: usize,
    n: usize,
) {
    let mut acc = [[0.0f64; NR]; R];
    for p in 0..k {
        let b_strip: &[f64; NR] = b[p * n + j..p * n + j + NR].try_into().unwrap();
        for r in 0..R {
            let av = a_rows[r * k + p];
            for l in 0..NR {
                acc[r][l] = av.mul_add(b_strip[l], acc[r][l]);
            }
        }
    }
    for r in 0..R {
        let c_strip = &mut c[r * n + j..r * n + j + NR];
        for (cv, av) in c_strip.iter_mut().zip(&acc[r]) {
            *cv += av;
        }
    }
}

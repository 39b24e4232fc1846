//! Row-compressed sparse matrices for the graph operators.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// A real-valued sparse matrix in compressed sparse row layout.
///
/// Column indices within a row are strictly increasing, so a `(row, col)`
/// pair can never appear twice.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate pairs are
    /// summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            if r >= rows || c >= cols {
                return Err(Error::InvalidArgument(alloc::format!(
                    "entry ({r}, {c}) outside a {rows}x{cols} matrix"
                )));
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Square identity matrix.
    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Value at `(row, col)`, zero when the entry is not stored.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (cols, vals) = self.row(row);
        match cols.binary_search(&col) {
            Ok(i) => vals[i],
            Err(_) => 0.0,
        }
    }

    /// Column indices and values stored in `row`.
    pub fn row(&self, row: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// All stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn transpose(&self) -> Self {
        // Row-major iteration keeps each output row sorted by column.
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (r, c, v) in self.iter() {
            let slot = next[c];
            col_idx[slot] = r;
            values[slot] = v;
            next[c] += 1;
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).1.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for (_, c, v) in self.iter() {
            sums[c] += v;
        }
        sums
    }

    /// Largest absolute difference between `A` and `Aᵀ`; zero for symmetric
    /// matrices.
    pub fn asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .chain(
                self.transpose()
                    .iter()
                    .map(|(r, c, v)| (v - self.get(r, c)).abs()),
            )
            .fold(0.0, f64::max)
    }

    /// Returns `S · X` for a row-major dense `X` with `k` columns.
    pub fn mul_dense(&self, x: &[f64], k: usize) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols * k);
        let mut out = vec![0.0; self.rows * k];
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let dst = &mut out[r * k..(r + 1) * k];
            for (&c, &v) in cols.iter().zip(vals) {
                let src = &x[c * k..(c + 1) * k];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
        out
    }

    /// Returns `Sᵀ · G` for a row-major dense `G` with `k` columns, without
    /// materializing the transpose.
    pub fn transpose_mul_dense(&self, g: &[f64], k: usize) -> Vec<f64> {
        debug_assert_eq!(g.len(), self.rows * k);
        let mut out = vec![0.0; self.cols * k];
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let src = &g[r * k..(r + 1) * k];
            for (&c, &v) in cols.iter().zip(vals) {
                let dst = &mut out[c * k..(c + 1) * k];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
        out
    }

    /// Dense row-major copy. Intended for tests and small diagnostics.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.rows * self.cols];
        for (r, c, v) in self.iter() {
            dense[r * self.cols + c] = v;
        }
        dense
    }

    /// Scales every row `r` by `left[r]` and every column `c` by `right[c]`.
    pub fn scale_rows_cols(&self, left: &[f64], right: &[f64]) -> Self {
        let mut out = self.clone();
        for r in 0..self.rows {
            for i in out.row_ptr[r]..out.row_ptr[r + 1] {
                out.values[i] *= left[r] * right[out.col_idx[i]];
            }
        }
        out
    }
}

/// Symmetric normalization `D̂^{-1/2} (A + I) D̂^{-1/2}` of a square binary
/// adjacency, where `D̂` holds the row sums of `A + I`.
pub fn normalize_adjacency(adj: &SparseMatrix) -> Result<SparseMatrix> {
    if adj.rows() != adj.cols() {
        return Err(Error::shape(
            "normalize_adjacency",
            alloc::format!("adjacency is {}x{}", adj.rows(), adj.cols()),
        ));
    }
    let n = adj.rows();
    let with_loops = SparseMatrix::from_triplets(
        n,
        n,
        adj.iter()
            .filter(|&(r, c, _)| r != c)
            .chain((0..n).map(|i| (i, i, 1.0))),
    )?;
    // Self-loops make every degree at least one.
    let inv_sqrt: Vec<f64> = with_loops
        .row_sums()
        .into_iter()
        .map(|d| 1.0 / math::sqrt(d))
        .collect();
    Ok(with_loops.scale_rows_cols(&inv_sqrt, &inv_sqrt))
}

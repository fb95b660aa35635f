//! Low-pass graph filtering of node attributes.
//!
//! Uses the symmetric normalized Laplacian of the graph with self-loops,
//! `L = I − D̃^{−1/2} (A + I) D̃^{−1/2}`, and smooths attributes with the
//! truncated filter `(I − sL)^m X`.

use crate::error::{Error, Result};
use crate::model::{DenseMatrix, SparseAdjacency};
use crate::par;

/// Symmetric normalized Laplacian in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedLaplacian {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedLaplacian {
    /// Builds `L` from a symmetric, nonnegatively weighted adjacency.
    pub fn build(adj: &SparseAdjacency) -> Result<Self> {
        let n = adj.n();
        for e in adj.entries() {
            if e.row >= n {
                return Err(Error::IndexOutOfRange { index: e.row, n });
            }
            if e.col >= n {
                return Err(Error::IndexOutOfRange { index: e.col, n });
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return Err(Error::NegativeWeight {
                    row: e.row,
                    col: e.col,
                    weight: e.weight,
                });
            }
            if adj.get(e.col, e.row) != e.weight {
                return Err(Error::Asymmetric {
                    row: e.row,
                    col: e.col,
                });
            }
        }

        // Ã = A + I, in CSR with the diagonal merged into each row.
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(adj.nnz() + n);
        let mut weights = Vec::with_capacity(adj.nnz() + n);
        indptr.push(0);
        let entries = adj.entries();
        let mut cursor = 0;
        for i in 0..n {
            let mut diag_done = false;
            while cursor < entries.len() && entries[cursor].row == i {
                let e = entries[cursor];
                if !diag_done && e.col >= i {
                    if e.col == i {
                        indices.push(i);
                        weights.push(e.weight + 1.0);
                        diag_done = true;
                        cursor += 1;
                        continue;
                    }
                    indices.push(i);
                    weights.push(1.0);
                    diag_done = true;
                }
                indices.push(e.col);
                weights.push(e.weight);
                cursor += 1;
            }
            if !diag_done {
                indices.push(i);
                weights.push(1.0);
            }
            indptr.push(indices.len());
        }

        let inv_sqrt_deg: Vec<f64> = (0..n)
            .map(|i| {
                let d: f64 = weights[indptr[i]..indptr[i + 1]].iter().sum();
                1.0 / d.sqrt()
            })
            .collect();

        let mut values = Vec::with_capacity(weights.len());
        for i in 0..n {
            for p in indptr[i]..indptr[i + 1] {
                let j = indices[p];
                let norm = weights[p] * (inv_sqrt_deg[i] * inv_sqrt_deg[j]);
                values.push(if i == j { 1.0 - norm } else { -norm });
            }
        }
        Ok(NormalizedLaplacian {
            n,
            indptr,
            indices,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// `Y − s·(L·Y)` for a dense `Y` with `n` rows.
    fn filter_step(&self, y: &DenseMatrix, s: f64) -> DenseMatrix {
        let cols = y.cols();
        let mut out = DenseMatrix::zeros(y.rows(), cols);
        par::for_each_row_mut(out.as_mut_slice(), cols, |i, row| {
            for (j, l) in self.row(i) {
                for (o, &v) in row.iter_mut().zip(y.row(j)) {
                    *o += l * v;
                }
            }
            for (o, &v) in row.iter_mut().zip(y.row(i)) {
                *o = v - s * *o;
            }
        });
        out
    }
}

/// `(I − sL)^m X`, applied as `m` sparse multiplies.
pub fn smooth(x: &DenseMatrix, lap: &NormalizedLaplacian, s: f64, m: usize) -> Result<DenseMatrix> {
    if x.rows() != lap.n() {
        return Err(Error::Dimension(format!(
            "attributes have {} rows but the graph has {} nodes",
            x.rows(),
            lap.n()
        )));
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::HyperParam(format!("filter strength s must be positive, got {s}")));
    }
    let mut y = x.clone();
    for _ in 0..m {
        y = lap.filter_step(&y, s);
    }
    Ok(y)
}

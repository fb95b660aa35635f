//! Shared data model: sparse adjacency, dense matrices, the multi-view
//! dataset, hyperparameters and training state.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Similarity used inside the contrastive softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    Dot,
    #[default]
    Cosine,
}

impl std::str::FromStr for SimilarityKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(SimilarityKind::Dot),
            "cosine" | "cos" => Ok(SimilarityKind::Cosine),
            other => Err(format!("unknown similarity kind {other:?} (expected dot or cosine)")),
        }
    }
}

/// One stored adjacency entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub row: usize,
    pub col: usize,
    pub weight: f64,
}

/// Sparse weighted adjacency in canonical coordinate form: entries sorted by
/// `(row, col)` with duplicates summed.
///
/// Construction never fails; out-of-range indices and bad weights are kept
/// and reported by [`SparseAdjacency::violations`] so that dataset
/// validation stays total.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAdjacency {
    n: usize,
    entries: Vec<Edge>,
    symmetric: bool,
}

impl SparseAdjacency {
    /// Canonicalizes coordinate entries. `symmetric` is a claim, checked by
    /// [`SparseAdjacency::violations`].
    pub fn from_entries<I>(n: usize, entries: I, symmetric: bool) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut raw: Vec<Edge> = entries
            .into_iter()
            .map(|(row, col, weight)| Edge { row, col, weight })
            .collect();
        raw.sort_by_key(|e| (e.row, e.col));
        let mut entries: Vec<Edge> = Vec::with_capacity(raw.len());
        for e in raw {
            match entries.last_mut() {
                Some(last) if last.row == e.row && last.col == e.col => last.weight += e.weight,
                _ => entries.push(e),
            }
        }
        SparseAdjacency {
            n,
            entries,
            symmetric,
        }
    }

    /// An adjacency with no edges.
    pub fn empty(n: usize) -> Self {
        SparseAdjacency {
            n,
            entries: Vec::new(),
            symmetric: true,
        }
    }

    /// Returns `max(A, Aᵀ)` with the symmetric flag set.
    pub fn symmetrized(&self) -> Self {
        let both = self
            .entries
            .iter()
            .flat_map(|e| [(e.row, e.col, e.weight), (e.col, e.row, e.weight)]);
        let mut raw: Vec<Edge> = both
            .map(|(row, col, weight)| Edge { row, col, weight })
            .collect();
        raw.sort_by_key(|e| (e.row, e.col));
        let mut entries: Vec<Edge> = Vec::with_capacity(raw.len());
        for e in raw {
            match entries.last_mut() {
                Some(last) if last.row == e.row && last.col == e.col => {
                    last.weight = last.weight.max(e.weight)
                }
                _ => entries.push(e),
            }
        }
        SparseAdjacency {
            n: self.n,
            entries,
            symmetric: true,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn entries(&self) -> &[Edge] {
        &self.entries
    }

    /// Weight at `(row, col)`, zero when absent.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries
            .binary_search_by(|e| (e.row, e.col).cmp(&(row, col)))
            .map(|i| self.entries[i].weight)
            .unwrap_or(0.0)
    }

    /// Number of self-loop entries present in the input.
    pub fn self_loops(&self) -> usize {
        self.entries.iter().filter(|e| e.row == e.col).count()
    }

    /// Lists every invariant violation; empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut out_of_range = 0usize;
        for e in &self.entries {
            if e.row >= self.n || e.col >= self.n {
                if out_of_range == 0 {
                    out.push(format!(
                        "index out of range: ({}, {}) with n = {}",
                        e.row, e.col, self.n
                    ));
                }
                out_of_range += 1;
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                out.push(format!(
                    "invalid weight {} at ({}, {})",
                    e.weight, e.row, e.col
                ));
            }
        }
        if out_of_range > 1 {
            out.push(format!("{out_of_range} entries have indices out of range"));
        }
        if self.symmetric {
            if let Some(e) = self
                .entries
                .iter()
                .find(|e| self.get(e.col, e.row) != e.weight)
            {
                out.push(format!(
                    "adjacency flagged symmetric but ({}, {}) has no matching transpose entry",
                    e.row, e.col
                ));
            }
        }
        out
    }
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    /// Builds from nested rows; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// First non-finite entry as `(row, col)`.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p / self.cols.max(1), p % self.cols.max(1)))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Scales every row to unit L2 norm; zero rows are left untouched.
    pub fn row_normalized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows {
            let row = out.row_mut(i);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// One (attributes, graph) pairing over the shared node set.
#[derive(Debug, Clone)]
pub struct View {
    pub attributes: DenseMatrix,
    pub adjacency: Arc<SparseAdjacency>,
}

/// N nodes described by V attribute matrices and V graphs. Views may share
/// an adjacency through the `Arc`.
#[derive(Debug, Clone)]
pub struct MultiViewGraphDataset {
    pub name: String,
    pub n_nodes: usize,
    pub views: Vec<View>,
    pub labels: Option<Vec<u32>>,
}

impl MultiViewGraphDataset {
    /// Builds a dataset, rejecting it unless [`validate_dataset`] is clean.
    pub fn new(
        name: impl Into<String>,
        n_nodes: usize,
        views: Vec<View>,
        labels: Option<Vec<u32>>,
    ) -> Result<Self> {
        let ds = MultiViewGraphDataset {
            name: name.into(),
            n_nodes,
            views,
            labels,
        };
        let report = validate_dataset(&ds);
        if report.is_empty() {
            Ok(ds)
        } else {
            Err(Error::InvalidDataset(report))
        }
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    /// Number of distinct adjacency objects (shared graphs counted once).
    pub fn distinct_graphs(&self) -> usize {
        let mut seen: Vec<*const SparseAdjacency> = Vec::new();
        for v in &self.views {
            let p = Arc::as_ptr(&v.adjacency);
            if !seen.contains(&p) {
                seen.push(p);
            }
        }
        seen.len()
    }
}

/// Violations found by [`validate_dataset`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks every dataset invariant and reports instead of failing.
pub fn validate_dataset(ds: &MultiViewGraphDataset) -> ValidationReport {
    let mut violations = Vec::new();
    let n = ds.n_nodes;
    if ds.views.is_empty() {
        violations.push("dataset has no views".to_string());
    }
    for (v, view) in ds.views.iter().enumerate() {
        let x = &view.attributes;
        if x.rows() != n {
            violations.push(format!("view {v}: attribute rows {} ≠ N {n}", x.rows()));
        }
        if let Some((i, j)) = x.first_non_finite() {
            violations.push(format!(
                "view {v}: non-finite attribute at ({i}, {j})"
            ));
        }
        let adj = &view.adjacency;
        if adj.n() != n {
            violations.push(format!("view {v}: adjacency n {} ≠ N {n}", adj.n()));
        }
        for msg in adj.violations() {
            violations.push(format!("view {v}: {msg}"));
        }
    }
    if let Some(labels) = &ds.labels {
        if labels.len() != n {
            violations.push(format!(
                "labels count mismatch: {} labels for N {n}",
                labels.len()
            ));
        }
    }
    ValidationReport { violations }
}

/// Hyperparameters of the hashing model. Defaults follow the published
/// settings (m=2, s=0.5, k=10, τ=0.2, γ=−4, η=1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    /// Filter order.
    pub m: usize,
    /// Filter strength.
    pub s: f64,
    /// Neighbors per node.
    pub k: usize,
    pub tau: f64,
    /// Smoothness exponent of the view-weight regularizer.
    pub gamma: f64,
    /// Weight of the view-weight regularizer.
    pub eta: f64,
    /// Quantization loss weight.
    pub alpha: f64,
    /// Bit-balance loss weight.
    pub beta: f64,
    pub bits: usize,
    pub sim_kind: SimilarityKind,
    pub epochs_max: usize,
    pub tol: f64,
    pub lr: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            m: 2,
            s: 0.5,
            k: 10,
            tau: 0.2,
            gamma: -4.0,
            eta: 1.0,
            alpha: 0.1,
            beta: 0.1,
            bits: 16,
            sim_kind: SimilarityKind::Cosine,
            epochs_max: 500,
            tol: 1e-5,
            lr: 1e-2,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::HyperParam(msg));
        if !(self.s > 0.0) || !self.s.is_finite() {
            return bad(format!("s must be positive, got {}", self.s));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if self.gamma == 1.0 || self.gamma == 0.0 || !self.gamma.is_finite() {
            return bad(format!("gamma must be finite and not 0 or 1, got {}", self.gamma));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.alpha >= 0.0) || !(self.beta >= 0.0) {
            return bad(format!(
                "alpha and beta must be nonnegative, got {} and {}",
                self.alpha, self.beta
            ));
        }
        if self.bits == 0 {
            return bad("bits must be at least 1".into());
        }
        if self.epochs_max == 0 {
            return bad("epochs_max must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return bad(format!("lr must be nonnegative, got {}", self.lr));
        }
        Ok(())
    }
}

/// Per-epoch objective decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_c_per_view: Vec<f64>,
    pub l_q: f64,
    pub l_bb: f64,
    pub weighted_total: f64,
}

impl LossBreakdown {
    pub fn compose(
        l_c_per_view: Vec<f64>,
        l_q: f64,
        l_bb: f64,
        lambda: &[f64],
        hp: &HyperParams,
    ) -> Self {
        let weighted_total = Self::objective(&l_c_per_view, l_q, l_bb, lambda, hp);
        LossBreakdown {
            l_c_per_view,
            l_q,
            l_bb,
            weighted_total,
        }
    }

    /// `Σ_v λ_v L_C,v + η Σ_v λ_v^γ + α L_Q + β L_BB`.
    pub fn objective(l_c: &[f64], l_q: f64, l_bb: f64, lambda: &[f64], hp: &HyperParams) -> f64 {
        let contrastive: f64 = l_c.iter().zip(lambda).map(|(l, w)| w * l).sum();
        let reg: f64 = lambda.iter().map(|w| w.powf(hp.gamma)).sum();
        contrastive + hp.eta * reg + hp.alpha * l_q + hp.beta * l_bb
    }

    pub fn is_finite(&self) -> bool {
        self.weighted_total.is_finite()
            && self.l_q.is_finite()
            && self.l_bb.is_finite()
            && self.l_c_per_view.iter().all(|v| v.is_finite())
    }
}

/// Mutable optimization state: the consensus embedding `u`, view weights,
/// Adam moments and the loss history.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub u: DenseMatrix,
    pub lambda: Vec<f64>,
    pub adam_m: DenseMatrix,
    pub adam_v: DenseMatrix,
    pub step: u64,
    pub history: Vec<LossBreakdown>,
}

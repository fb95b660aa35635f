//! Exact k-nearest-neighbor sets under cosine similarity.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::DenseMatrix;
use crate::par;

/// Neighbor lists of one view: `n` rows of `k` ids each, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighbors {
    n: usize,
    k: usize,
    ids: Vec<usize>,
}

impl Neighbors {
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        let mut ids = Vec::with_capacity(n * k);
        for (i, mut r) in rows.into_iter().enumerate() {
            if r.len() != k {
                return Err(Error::Dimension(format!(
                    "neighbor row {i} has {} entries, expected {k}",
                    r.len()
                )));
            }
            r.sort_unstable();
            for &j in &r {
                if j >= n {
                    return Err(Error::IndexOutOfRange { index: j, n });
                }
                if j == i {
                    return Err(Error::Dimension(format!("node {i} lists itself as a neighbor")));
                }
            }
            if r.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Dimension(format!("neighbor row {i} has duplicates")));
            }
            ids.extend(r);
        }
        Ok(Neighbors { n, k, ids })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[usize] {
        &self.ids[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&j).is_ok()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }
}

/// Neighbor lists for every view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSets {
    pub per_view: Vec<Neighbors>,
}

impl NeighborSets {
    pub fn n_views(&self) -> usize {
        self.per_view.len()
    }
}

/// Total order used for ranking candidates: larger similarity first, then
/// smaller index.
#[inline]
fn rank_order(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// For each row, the `min(k, n−1)` other rows of highest cosine similarity.
/// Zero rows have similarity 0 to everything.
pub fn build_knn(sv: &DenseMatrix, k: usize) -> Result<Neighbors> {
    let n = sv.rows();
    if n < 2 {
        return Err(Error::TooFewNodes { needed: 2, got: n });
    }
    if k == 0 {
        return Err(Error::HyperParam("k must be at least 1".into()));
    }
    let k = k.min(n - 1);
    let unit = sv.row_normalized();
    let rows = par::map_range(n, |i| {
        let anchor = unit.row(i);
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let s: f64 = anchor.iter().zip(unit.row(j)).map(|(a, b)| a * b).sum();
                // adding +0.0 turns -0.0 into +0.0 so zero rows tie exactly
                (s + 0.0, j)
            })
            .collect();
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, rank_order);
            cand.truncate(k);
        }
        let mut ids: Vec<usize> = cand.into_iter().map(|(_, j)| j).collect();
        ids.sort_unstable();
        ids
    });
    Ok(Neighbors {
        n,
        k,
        ids: rows.into_iter().flatten().collect(),
    })
}

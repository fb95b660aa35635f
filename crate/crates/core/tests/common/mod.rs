//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use mvghash_core::model::{DenseMatrix, HyperParams, SimilarityKind, SparseAdjacency};
use mvghash_core::neighbors::{NeighborSets, Neighbors};
use mvghash_core::{losses, BinaryCodes};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `k` distinct non-self neighbors per node, drawn uniformly.
pub fn random_neighbors(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Neighbors {
    let rows = (0..n)
        .map(|i| {
            sample(rng, n - 1, k)
                .into_iter()
                .map(|j| if j >= i { j + 1 } else { j })
                .collect()
        })
        .collect();
    Neighbors::from_rows(rows).unwrap()
}

pub fn random_neighbor_sets(rng: &mut ChaCha8Rng, n: usize, k: usize, views: usize) -> NeighborSets {
    NeighborSets {
        per_view: (0..views).map(|_| random_neighbors(rng, n, k)).collect(),
    }
}

/// Symmetric graph with random positive weights and occasional self-loops.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SparseAdjacency {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i..n {
            let q = if i == j { 0.1 } else { p };
            if rng.random::<f64>() < q {
                let w = rng.random_range(0.1..2.0);
                edges.push((i, j, w));
                if i != j {
                    edges.push((j, i, w));
                }
            }
        }
    }
    SparseAdjacency::from_entries(n, edges, true)
}

fn dense_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|c| row.iter().zip(b).map(|(x, brow)| x * brow[c]).sum())
                .collect()
        })
        .collect()
}

/// `I − D̃^{-1/2}(A + I)D̃^{-1/2}` built densely.
pub fn dense_laplacian(adj: &SparseAdjacency) -> Vec<Vec<f64>> {
    let n = adj.n();
    let mut a = vec![vec![0.0; n]; n];
    for e in adj.entries() {
        a[e.row][e.col] += e.weight;
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum::<f64>()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let eye = if i == j { 1.0 } else { 0.0 };
                    eye - a[i][j] / (d[i].sqrt() * d[j].sqrt())
                })
                .collect()
        })
        .collect()
}

/// `(I − sL)^m X` by explicit dense matrix powers.
pub fn dense_smooth(adj: &SparseAdjacency, x: &DenseMatrix, s: f64, m: usize) -> DenseMatrix {
    let n = adj.n();
    let l = dense_laplacian(adj);
    let step: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } - s * l[i][j]).collect())
        .collect();
    let mut power: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..m {
        power = dense_mul(&power, &step);
    }
    let xs: Vec<Vec<f64>> = (0..x.rows()).map(|i| x.row(i).to_vec()).collect();
    DenseMatrix::from_rows(&dense_mul(&power, &xs)).unwrap()
}

/// All-pairs cosine kNN with a full sort.
pub fn brute_knn(x: &DenseMatrix, k: usize) -> Vec<Vec<usize>> {
    let n = x.rows();
    let norm = |i: usize| x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
    (0..n)
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let (ni, nj) = (norm(i), norm(j));
                    let sim = if ni == 0.0 || nj == 0.0 {
                        0.0
                    } else {
                        x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a / ni) * (b / nj)).sum()
                    };
                    (sim, j)
                })
                .collect();
            cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut ids: Vec<usize> = cand.iter().take(k).map(|c| c.1).collect();
            ids.sort_unstable();
            ids
        })
        .collect()
}

/// Per-query average precision by sorting `(distance, id)` pairs.
pub fn naive_aps(codes: &BinaryCodes, labels: &[u32]) -> Vec<Option<f64>> {
    let n = codes.n();
    (0..n)
        .map(|q| {
            let mut order: Vec<(u32, usize)> = (0..n)
                .filter(|&j| j != q)
                .map(|j| {
                    let d = (0..codes.bits()).filter(|&b| codes.bit(q, b) != codes.bit(j, b)).count();
                    (d as u32, j)
                })
                .collect();
            order.sort();
            let relevant = order.iter().filter(|&&(_, j)| labels[j] == labels[q]).count();
            if relevant == 0 {
                return None;
            }
            let mut hits = 0.0;
            let mut total = 0.0;
            for (rank, &(_, j)) in order.iter().enumerate() {
                if labels[j] == labels[q] {
                    hits += 1.0;
                    total += hits / (rank + 1) as f64;
                }
            }
            Some(total / relevant as f64)
        })
        .collect()
}

pub fn naive_map(codes: &BinaryCodes, labels: &[u32]) -> f64 {
    let aps: Vec<f64> = naive_aps(codes, labels).into_iter().flatten().collect();
    aps.iter().sum::<f64>() / aps.len() as f64
}

pub fn random_codes(rng: &mut ChaCha8Rng, n: usize, bits: usize) -> BinaryCodes {
    let b = DenseMatrix::from_fn(n, bits, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
    BinaryCodes::pack(&b).unwrap()
}

/// Central finite-difference gradient of the full objective.
pub fn fd_gradient(u: &DenseMatrix, nbrs: &NeighborSets, lambda: &[f64], hp: &HyperParams, h: f64) -> DenseMatrix {
    let mut probe = u.clone();
    let mut g = DenseMatrix::zeros(u.rows(), u.cols());
    for i in 0..u.rows() {
        for c in 0..u.cols() {
            let x = u.get(i, c);
            probe.set(i, c, x + h);
            let up = losses::total_objective(&probe, nbrs, lambda, hp).unwrap().weighted_total;
            probe.set(i, c, x - h);
            let down = losses::total_objective(&probe, nbrs, lambda, hp).unwrap().weighted_total;
            probe.set(i, c, x);
            g.set(i, c, (up - down) / (2.0 * h));
        }
    }
    g
}

/// Normwise relative error `max|a − b| / max|b|` over entries kept by `keep`.
pub fn rel_error(a: &DenseMatrix, b: &DenseMatrix, keep: impl Fn(usize, usize) -> bool) -> f64 {
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..a.rows() {
        for c in 0..a.cols() {
            if keep(i, c) {
                diff = diff.max((a.get(i, c) - b.get(i, c)).abs());
                scale = scale.max(b.get(i, c).abs());
            }
        }
    }
    diff / scale.max(1e-300)
}

pub fn kind_name(kind: SimilarityKind) -> &'static str {
    match kind {
        SimilarityKind::Dot => "dot",
        SimilarityKind::Cosine => "cosine",
    }
}

//! Planted-partition multi-view data for recovery tests and demos.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DenseMatrix, MultiViewGraphDataset, SparseAdjacency, View};

/// Stochastic block model with Gaussian block-mean attributes.
///
/// Block means sit on scaled coordinate axes so that every pair of means is
/// `separation` apart; attribute noise has standard deviation
/// `noise_ratio * separation` in every coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub blocks: usize,
    pub block_size: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub n_views: usize,
    pub dim: usize,
    pub separation: f64,
    pub noise_ratio: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig {
            blocks: 3,
            block_size: 50,
            p_in: 0.3,
            p_out: 0.02,
            n_views: 2,
            dim: 8,
            separation: 1.0,
            noise_ratio: 1.5,
            seed: 0,
        }
    }
}

pub fn sbm_dataset(cfg: &SbmConfig) -> Result<MultiViewGraphDataset> {
    if cfg.dim < cfg.blocks {
        return Err(Error::Dimension(format!(
            "attribute dimension {} must be at least the block count {}",
            cfg.dim, cfg.blocks
        )));
    }
    let n = cfg.blocks * cfg.block_size;
    let labels: Vec<u32> = (0..n).map(|i| (i / cfg.block_size) as u32).collect();
    let noise = Normal::new(0.0, cfg.noise_ratio * cfg.separation)
        .map_err(|e| Error::HyperParam(format!("noise: {e}")))?;
    let offset = cfg.separation / std::f64::consts::SQRT_2;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut views = Vec::with_capacity(cfg.n_views);
    for _ in 0..cfg.n_views {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = if labels[i] == labels[j] { cfg.p_in } else { cfg.p_out };
                if rng.random::<f64>() < p {
                    edges.push((i, j, 1.0));
                }
            }
        }
        let adjacency = SparseAdjacency::from_entries(n, edges, false).symmetrized();
        let attributes = DenseMatrix::from_fn(n, cfg.dim, |i, d| {
            let mean = if d == labels[i] as usize { offset } else { 0.0 };
            mean + noise.sample(&mut rng)
        });
        views.push(View {
            attributes,
            adjacency: Arc::new(adjacency),
        });
    }
    MultiViewGraphDataset::new(format!("sbm-{}x{}", cfg.blocks, cfg.block_size), n, views, Some(labels))
}

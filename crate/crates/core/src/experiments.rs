//! Hyperparameter grids and ablation tables.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::MultiViewGraphDataset;
use crate::par;
use crate::retrieval::map_at_all;
use crate::trainer::{prepare_neighbors, train_on_neighbors, TrainConfig, TrainOutcome, Variant};

/// The α/β search set.
pub const ALPHA_BETA_GRID: [f64; 6] = [0.005, 0.01, 0.05, 0.1, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub dataset: String,
    pub bits: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub map_at_all: f64,
    pub epochs: usize,
    pub converged: bool,
    /// `ok`, or the error that stopped this grid point.
    pub status: String,
}

fn labels_of(ds: &MultiViewGraphDataset) -> Result<&[u32]> {
    ds.labels.as_deref().ok_or(Error::NoLabels)
}

/// Trains every `(bits, alpha, beta)` combination. Neighbor sets are built
/// once and shared; grid points run concurrently and come back in grid order.
pub fn sweep(
    ds: &MultiViewGraphDataset,
    base: &TrainConfig,
    alphas: &[f64],
    betas: &[f64],
    bits: &[usize],
) -> Result<Vec<SweepRow>> {
    let labels = labels_of(ds)?;
    base.validate()?;
    let nbrs = prepare_neighbors(ds, base)?;
    let mut grid = Vec::with_capacity(alphas.len() * betas.len() * bits.len());
    for &k in bits {
        for &a in alphas {
            for &b in betas {
                grid.push((k, a, b));
            }
        }
    }
    let rows = par::map_slice(&grid, |&(k, a, b)| {
        let mut cfg = base.clone();
        cfg.hp.bits = k;
        cfg.hp.alpha = a;
        cfg.hp.beta = b;
        let mut row = SweepRow {
            method: Variant::Full.label().to_string(),
            dataset: ds.name.clone(),
            bits: k,
            alpha: a,
            beta: b,
            seed: cfg.hp.seed,
            map_at_all: f64::NAN,
            epochs: 0,
            converged: false,
            status: "ok".to_string(),
        };
        match train_on_neighbors(ds, &nbrs, &cfg, |_| {})
            .and_then(|out| Ok((map_at_all(&out.codes, labels)?, out)))
        {
            Ok((m, out)) => {
                row.map_at_all = m.map;
                row.epochs = out.state.history.len();
                row.converged = out.converged;
            }
            Err(e) => row.status = e.to_string(),
        }
        row
    });
    Ok(rows)
}

/// Highest-mAP row that finished.
pub fn best_row(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter()
        .filter(|r| r.map_at_all.is_finite())
        .max_by(|a, b| a.map_at_all.total_cmp(&b.map_at_all))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub method: String,
    pub dataset: String,
    pub bits: usize,
    pub seed: u64,
    pub map_at_all: f64,
    pub final_l_q: f64,
    pub mean_abs_u: f64,
    pub epochs: usize,
}

pub fn mean_abs(out: &TrainOutcome) -> f64 {
    let u = out.state.u.as_slice();
    u.iter().map(|v| v.abs()).sum::<f64>() / u.len() as f64
}

/// Trains the four ablation variants with identical seeds.
pub fn ablation_table(ds: &MultiViewGraphDataset, cfg: &TrainConfig) -> Result<Vec<AblationRow>> {
    let labels = labels_of(ds)?;
    let filtered = prepare_neighbors(ds, &Variant::Full.apply(cfg))?;
    let raw = prepare_neighbors(ds, &Variant::NoFilter.apply(cfg))?;
    let rows = par::map_slice(&Variant::ALL, |&v| -> Result<AblationRow> {
        let vcfg = v.apply(cfg);
        let nbrs = if vcfg.use_filter { &filtered } else { &raw };
        let out = train_on_neighbors(ds, nbrs, &vcfg, |_| {})?;
        Ok(AblationRow {
            method: v.label().to_string(),
            dataset: ds.name.clone(),
            bits: vcfg.hp.bits,
            seed: vcfg.hp.seed,
            map_at_all: map_at_all(&out.codes, labels)?.map,
            final_l_q: out.state.history.last().map_or(f64::NAN, |b| b.l_q),
            mean_abs_u: mean_abs(&out),
            epochs: out.state.history.len(),
        })
    });
    rows.into_iter().collect()
}

/// Writes serializable rows as CSV with a header.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

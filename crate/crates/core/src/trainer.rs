//! Alternating optimization: Adam steps on `U` with the view weights fixed,
//! then the closed-form view-weight update, until the objective settles.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::codes::{BinaryCodes, CodesMetadata};
use crate::error::{Error, Result};
use crate::filter::{smooth, NormalizedLaplacian};
use crate::losses::{objective_and_grad, update_view_weights, GradientMode};
use crate::model::{DenseMatrix, HyperParams, LossBreakdown, MultiViewGraphDataset, TrainState};
use crate::neighbors::{build_knn, NeighborSets};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hp: HyperParams,
    pub adam: AdamConfig,
    /// View weights are refreshed every this many epochs.
    pub lambda_update_every: usize,
    /// Standard deviation of the initial embedding; `None` means `1/√K`.
    pub init_scale: Option<f64>,
    pub gradient: GradientMode,
    /// When false, kNN sets are built on the raw attributes.
    pub use_filter: bool,
}

impl TrainConfig {
    pub fn new(hp: HyperParams) -> Self {
        let adam = AdamConfig {
            lr: hp.lr,
            ..AdamConfig::default()
        };
        TrainConfig {
            hp,
            adam,
            lambda_update_every: 1,
            init_scale: None,
            gradient: GradientMode::Exact,
            use_filter: true,
        }
    }

    pub fn init_scale(&self) -> f64 {
        self.init_scale
            .unwrap_or_else(|| 1.0 / (self.hp.bits as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        self.hp.validate()?;
        let a = &self.adam;
        if !(a.beta1 > 0.0 && a.beta1 < 1.0 && a.beta2 > 0.0 && a.beta2 < 1.0) {
            return Err(Error::HyperParam(format!(
                "adam betas must lie in (0, 1), got {} and {}",
                a.beta1, a.beta2
            )));
        }
        if !(a.lr >= 0.0) || !(a.eps > 0.0) {
            return Err(Error::HyperParam("adam lr must be >= 0 and eps > 0".into()));
        }
        if self.lambda_update_every == 0 {
            return Err(Error::HyperParam("lambda_update_every must be at least 1".into()));
        }
        if !(self.init_scale() > 0.0) {
            return Err(Error::HyperParam("init_scale must be positive".into()));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::new(HyperParams::default())
    }
}

/// Ablation variants: the full model and the three single-component removals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Neighbors from raw attributes.
    NoFilter,
    /// α = 0.
    NoQuant,
    /// β = 0.
    NoBalance,
    Full,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::NoFilter,
        Variant::NoQuant,
        Variant::NoBalance,
        Variant::Full,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::NoFilter => "CMGHash-f",
            Variant::NoQuant => "CMGHash-q",
            Variant::NoBalance => "CMGHash-b",
            Variant::Full => "CMGHash",
        }
    }

    pub fn apply(self, cfg: &TrainConfig) -> TrainConfig {
        let mut cfg = cfg.clone();
        match self {
            Variant::NoFilter => cfg.use_filter = false,
            Variant::NoQuant => cfg.hp.alpha = 0.0,
            Variant::NoBalance => cfg.hp.beta = 0.0,
            Variant::Full => {}
        }
        cfg
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "no_filter" | "f" => Ok(Variant::NoFilter),
            "no_quant" | "q" => Ok(Variant::NoQuant),
            "no_balance" | "b" => Ok(Variant::NoBalance),
            "full" => Ok(Variant::Full),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub l_c_per_view: Vec<f64>,
    pub l_q: f64,
    pub l_bb: f64,
    pub total: f64,
    pub lambda: Vec<f64>,
    pub wall_ms: f64,
}

/// Result of a full training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: TrainState,
    pub codes: BinaryCodes,
    pub converged: bool,
}

/// Fresh state: Gaussian `U`, unit view weights, zero moments.
pub fn init_state(n: usize, n_views: usize, cfg: &TrainConfig) -> Result<TrainState> {
    if n < 2 {
        return Err(Error::TooFewNodes { needed: 2, got: n });
    }
    let k = cfg.hp.bits;
    let normal = Normal::new(0.0, cfg.init_scale())
        .map_err(|e| Error::HyperParam(format!("init_scale: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.hp.seed);
    let data: Vec<f64> = (0..n * k).map(|_| normal.sample(&mut rng)).collect();
    Ok(TrainState {
        u: DenseMatrix::new(n, k, data)?,
        lambda: vec![1.0; n_views],
        adam_m: DenseMatrix::zeros(n, k),
        adam_v: DenseMatrix::zeros(n, k),
        step: 0,
        history: Vec::new(),
    })
}

/// Smoothed attributes of every view.
pub fn smooth_views(ds: &MultiViewGraphDataset, hp: &HyperParams) -> Result<Vec<DenseMatrix>> {
    ds.views
        .iter()
        .map(|v| {
            let lap = NormalizedLaplacian::build(&v.adjacency)?;
            smooth(&v.attributes, &lap, hp.s, hp.m)
        })
        .collect()
}

/// Filters each view (unless disabled) and builds its kNN sets.
pub fn prepare_neighbors(ds: &MultiViewGraphDataset, cfg: &TrainConfig) -> Result<NeighborSets> {
    let features = if cfg.use_filter {
        smooth_views(ds, &cfg.hp)?
    } else {
        ds.views.iter().map(|v| v.attributes.clone()).collect()
    };
    let per_view = features
        .iter()
        .map(|s| build_knn(s, cfg.hp.k))
        .collect::<Result<Vec<_>>>()?;
    Ok(NeighborSets { per_view })
}

fn adam_step(state: &mut TrainState, grad: &DenseMatrix, adam: &AdamConfig) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - adam.beta1.powi(t);
    let bc2 = 1.0 - adam.beta2.powi(t);
    let u = state.u.as_mut_slice();
    let m = state.adam_m.as_mut_slice();
    let v = state.adam_v.as_mut_slice();
    for (((u, m), v), &g) in u.iter_mut().zip(m).zip(v).zip(grad.as_slice()) {
        *m = adam.beta1 * *m + (1.0 - adam.beta1) * g;
        *v = adam.beta2 * *v + (1.0 - adam.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *u -= adam.lr * m_hat / (v_hat.sqrt() + adam.eps);
    }
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    (cur - prev).abs() / prev.abs().max(1.0)
}

/// Runs the optimization loop on precomputed neighbor sets.
///
/// Each epoch evaluates the objective at the current `U`, records it, stops
/// if the relative change from the previous epoch is below `tol`, and
/// otherwise takes one Adam step followed by the view-weight update using
/// that epoch's contrastive losses.
pub fn optimize<F>(
    n: usize,
    nbrs: &NeighborSets,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<(TrainState, bool)>
where
    F: FnMut(&EpochLog),
{
    cfg.validate()?;
    let mut state = init_state(n, nbrs.n_views(), cfg)?;
    let started = Instant::now();
    let mut converged = false;
    for epoch in 0..cfg.hp.epochs_max {
        let diverged = |state: &TrainState| Error::Diverged {
            epoch,
            last_finite: state.history.last().cloned().map(|b| (epoch - 1, b)),
        };
        let (breakdown, grad) =
            match objective_and_grad(&state.u, nbrs, &state.lambda, &cfg.hp, cfg.gradient) {
                Ok(r) => r,
                Err(Error::NonFiniteSimilarity { .. } | Error::ZeroNormRow { .. }) => {
                    return Err(diverged(&state))
                }
                Err(e) => return Err(e),
            };
        if !breakdown.is_finite() || !grad.is_finite() {
            return Err(diverged(&state));
        }
        on_epoch(&EpochLog {
            epoch,
            l_c_per_view: breakdown.l_c_per_view.clone(),
            l_q: breakdown.l_q,
            l_bb: breakdown.l_bb,
            total: breakdown.weighted_total,
            lambda: state.lambda.clone(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        let prev = state.history.last().map(|b| b.weighted_total);
        let l_c = breakdown.l_c_per_view.clone();
        state.history.push(breakdown);
        if let Some(prev) = prev {
            if relative_change(prev, state.history[epoch].weighted_total) < cfg.hp.tol {
                converged = true;
                break;
            }
        }
        adam_step(&mut state, &grad, &cfg.adam);
        if (epoch + 1) % cfg.lambda_update_every == 0 {
            state.lambda = update_view_weights(&l_c, cfg.hp.eta, cfg.hp.gamma)?;
        }
    }
    Ok((state, converged))
}

fn finish(ds: &MultiViewGraphDataset, cfg: &TrainConfig, state: TrainState, converged: bool) -> TrainOutcome {
    let codes = BinaryCodes::from_embedding(&state.u).with_metadata(CodesMetadata {
        dataset: ds.name.clone(),
        seed: cfg.hp.seed,
        hyperparams: Some(cfg.hp.clone()),
    });
    TrainOutcome {
        state,
        codes,
        converged,
    }
}

/// Filters, builds neighbors, optimizes, and binarizes.
pub fn train(ds: &MultiViewGraphDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_log(ds, cfg, |_| {})
}

pub fn train_with_log<F>(ds: &MultiViewGraphDataset, cfg: &TrainConfig, on_epoch: F) -> Result<TrainOutcome>
where
    F: FnMut(&EpochLog),
{
    cfg.validate()?;
    let nbrs = prepare_neighbors(ds, cfg)?;
    let (state, converged) = optimize(ds.n_nodes, &nbrs, cfg, on_epoch)?;
    Ok(finish(ds, cfg, state, converged))
}

/// Like [`train`] but reuses neighbor sets built elsewhere.
pub fn train_on_neighbors<F>(
    ds: &MultiViewGraphDataset,
    nbrs: &NeighborSets,
    cfg: &TrainConfig,
    on_epoch: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&EpochLog),
{
    if nbrs.n_views() != ds.n_views() || nbrs.per_view.iter().any(|nb| nb.n() != ds.n_nodes) {
        return Err(Error::Dimension(format!(
            "neighbor sets ({} views) do not match dataset ({} views, {} nodes)",
            nbrs.n_views(),
            ds.n_views(),
            ds.n_nodes
        )));
    }
    let (state, converged) = optimize(ds.n_nodes, nbrs, cfg, on_epoch)?;
    Ok(finish(ds, cfg, state, converged))
}

/// Trains one ablation variant.
pub fn ablate(ds: &MultiViewGraphDataset, cfg: &TrainConfig, variant: Variant) -> Result<TrainOutcome> {
    train(ds, &variant.apply(cfg))
}

/// Median of the objective over the first and last tenth of the history.
pub fn head_tail_medians(history: &[LossBreakdown]) -> Option<(f64, f64)> {
    if history.is_empty() {
        return None;
    }
    let w = (history.len() / 10).max(1);
    let median = |xs: &[LossBreakdown]| {
        let mut v: Vec<f64> = xs.iter().map(|b| b.weighted_total).collect();
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len().is_multiple_of(2) {
            0.5 * (v[m - 1] + v[m])
        } else {
            v[m]
        }
    };
    Some((median(&history[..w]), median(&history[history.len() - w..])))
}

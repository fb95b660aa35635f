//! Compact binary codes for the nodes of multi-view graph data.
//!
//! The pipeline smooths each view's attributes with a low-pass graph filter,
//! takes every node's k nearest neighbors per view as contrastive positives,
//! learns one consensus embedding `U` by alternating Adam steps with a
//! closed-form update of per-view weights, and binarizes with `sign(U)`.
//! Codes are evaluated by Hamming ranking and mAP@all.
//!
//! With the default `parallel` feature the inner loops (per-anchor loss and
//! gradient rows, kNN rows, filter rows, retrieval queries, sweep points)
//! run on rayon. Without it the same code runs sequentially. Outputs are
//! identical either way.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codes;
pub mod error;
pub mod experiments;
pub mod filter;
pub mod io;
pub mod losses;
pub mod model;
pub mod neighbors;
pub mod par;
pub mod retrieval;
pub mod synthetic;
pub mod trainer;

pub use codes::{hamming, BinaryCodes, CodesMetadata};
pub use error::{Error, Result};
pub use filter::{smooth, NormalizedLaplacian};
pub use losses::{
    bit_balance_grad, bit_balance_loss, contrastive_grad, contrastive_grad_anchor_only,
    contrastive_loss, quantization_grad, quantization_loss, total_grad, total_objective,
    update_view_weights, GradientMode,
};
pub use model::{
    validate_dataset, DenseMatrix, HyperParams, LossBreakdown, MultiViewGraphDataset,
    SimilarityKind, SparseAdjacency, TrainState, ValidationReport, View,
};
pub use neighbors::{build_knn, NeighborSets, Neighbors};
pub use retrieval::{evaluate, map_at_all, precision_at, rank_all, EvalReport, RetrievalResult};
pub use trainer::{ablate, init_state, train, AdamConfig, TrainConfig, TrainOutcome, Variant};

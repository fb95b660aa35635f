//! Objective terms and their gradients with respect to the embedding `U`.
//!
//! The contrastive term of one view is
//!
//! ```text
//! L_C = −Σ_i Σ_{j∈N(i)} log( exp(s_ij/τ) / Σ_{p≠i} exp(s_ip/τ) )
//! ```
//!
//! Writing `logZ_i` for the log-denominator of anchor `i`, the derivative
//! with respect to a similarity is `∂L_C/∂s_ip = W_ip/τ` with
//! `W_ip = k·P_ip − [p ∈ N(i)]`. Because `s_ip = s_pi`, row `x` of the exact
//! gradient collects `C_xp = W_xp + W_px` over all `p ≠ x`; the anchor-only
//! evaluator keeps only `W_xp`.
//!
//! Evaluation runs in two passes over anchors (log-denominators, then
//! gradient rows), each row independent, so peak memory is `O(N)` per
//! worker and results do not depend on the thread schedule.

use serde::{Deserialize, Serialize};

use crate::codes::sign;
use crate::error::{Error, Result};
use crate::model::{DenseMatrix, HyperParams, LossBreakdown, SimilarityKind};
use crate::neighbors::{NeighborSets, Neighbors};
use crate::par;

/// Which contrastive gradient the optimizer follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// True gradient of the contrastive loss.
    #[default]
    Exact,
    /// Only the terms in which a row is the anchor.
    AnchorOnly,
}

impl SimilarityKind {
    /// `sim(a, b)`; cosine of a zero vector is NaN.
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        let d = dot(a, b);
        match self {
            SimilarityKind::Dot => d,
            SimilarityKind::Cosine => d / (norm(a) * norm(b)),
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Rows fed to the similarity: `U` itself for dot, `Û` for cosine.
struct Prepared {
    rows: DenseMatrix,
    norms: Vec<f64>,
}

impl Prepared {
    fn new(u: &DenseMatrix, kind: SimilarityKind) -> Self {
        let norms: Vec<f64> = (0..u.rows()).map(|i| norm(u.row(i))).collect();
        let rows = match kind {
            SimilarityKind::Dot => u.clone(),
            SimilarityKind::Cosine => {
                let mut r = u.clone();
                for (i, &nrm) in norms.iter().enumerate() {
                    // zero rows become NaN and surface as non-finite similarities
                    r.row_mut(i).iter_mut().for_each(|v| *v /= nrm);
                }
                r
            }
        };
        Prepared { rows, norms }
    }

    #[inline]
    fn sim(&self, x: usize, p: usize) -> f64 {
        dot(self.rows.row(x), self.rows.row(p))
    }

    /// Similarities of `x` to every row (entry `x` is left at zero).
    fn sims_of(&self, x: usize, out: &mut [f64]) {
        for (p, o) in out.iter_mut().enumerate() {
            *o = if p == x { 0.0 } else { self.sim(x, p) };
        }
    }
}

fn check_neighbors(u: &DenseMatrix, nbrs: &Neighbors, tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::HyperParam(format!("tau must be positive, got {tau}")));
    }
    if nbrs.n() != u.rows() {
        return Err(Error::Dimension(format!(
            "neighbor sets cover {} nodes but U has {} rows",
            nbrs.n(),
            u.rows()
        )));
    }
    Ok(())
}

/// Log-denominator and loss contribution of every anchor.
fn anchor_pass(prep: &Prepared, nbrs: &Neighbors, tau: f64) -> Result<Vec<(f64, f64)>> {
    let n = prep.rows.rows();
    let per_anchor = par::map_range(n, |i| -> Result<(f64, f64)> {
        let mut s = vec![0.0; n];
        prep.sims_of(i, &mut s);
        let mut max = f64::NEG_INFINITY;
        for (p, &v) in s.iter().enumerate() {
            if p == i {
                continue;
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteSimilarity { row: i, col: p });
            }
            max = max.max(v / tau);
        }
        let mut z = 0.0;
        for (p, &v) in s.iter().enumerate() {
            if p != i {
                z += (v / tau - max).exp();
            }
        }
        let log_z = max + z.ln();
        let term: f64 = nbrs.row(i).iter().map(|&j| log_z - s[j] / tau).sum();
        Ok((log_z, term))
    });
    per_anchor.into_iter().collect()
}

fn gradient_pass(
    prep: &Prepared,
    nbrs: &Neighbors,
    tau: f64,
    kind: SimilarityKind,
    log_z: &[f64],
    mode: GradientMode,
) -> Result<DenseMatrix> {
    let n = prep.rows.rows();
    let dim = prep.rows.cols();
    if kind == SimilarityKind::Cosine {
        if let Some(row) = prep.norms.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroNormRow { row });
        }
    }
    let k = nbrs.k() as f64;
    let mut grad = DenseMatrix::zeros(n, dim);
    par::for_each_row_mut(grad.as_mut_slice(), dim, |x, g| {
        let mut s = vec![0.0; n];
        prep.sims_of(x, &mut s);
        let own = nbrs.row(x);
        let mut weighted_sim = 0.0;
        for p in 0..n {
            if p == x {
                continue;
            }
            let sp = s[p] / tau;
            let mut c = k * (sp - log_z[x]).exp() - f64::from(own.binary_search(&p).is_ok() as u8);
            if mode == GradientMode::Exact {
                c += k * (sp - log_z[p]).exp() - f64::from(nbrs.contains(p, x) as u8);
            }
            weighted_sim += c * s[p];
            for (gi, &r) in g.iter_mut().zip(prep.rows.row(p)) {
                *gi += c * r;
            }
        }
        match kind {
            SimilarityKind::Dot => g.iter_mut().for_each(|v| *v /= tau),
            SimilarityKind::Cosine => {
                let scale = 1.0 / (tau * prep.norms[x]);
                for (gi, &r) in g.iter_mut().zip(prep.rows.row(x)) {
                    *gi = scale * (*gi - weighted_sim * r);
                }
            }
        }
    });
    Ok(grad)
}

/// Contrastive loss of one view, with the log-sum-exp shift.
pub fn contrastive_loss(
    u: &DenseMatrix,
    nbrs: &Neighbors,
    tau: f64,
    kind: SimilarityKind,
) -> Result<f64> {
    check_neighbors(u, nbrs, tau)?;
    let prep = Prepared::new(u, kind);
    Ok(anchor_pass(&prep, nbrs, tau)?.iter().map(|&(_, t)| t).sum())
}

/// Exact gradient of [`contrastive_loss`] with respect to every row of `u`.
pub fn contrastive_grad(
    u: &DenseMatrix,
    nbrs: &Neighbors,
    tau: f64,
    kind: SimilarityKind,
) -> Result<DenseMatrix> {
    Ok(contrastive_loss_and_grad(u, nbrs, tau, kind, GradientMode::Exact)?.1)
}

/// Gradient keeping only the anchor terms, for comparison with the exact one.
pub fn contrastive_grad_anchor_only(
    u: &DenseMatrix,
    nbrs: &Neighbors,
    tau: f64,
    kind: SimilarityKind,
) -> Result<DenseMatrix> {
    Ok(contrastive_loss_and_grad(u, nbrs, tau, kind, GradientMode::AnchorOnly)?.1)
}

pub fn contrastive_loss_and_grad(
    u: &DenseMatrix,
    nbrs: &Neighbors,
    tau: f64,
    kind: SimilarityKind,
    mode: GradientMode,
) -> Result<(f64, DenseMatrix)> {
    check_neighbors(u, nbrs, tau)?;
    let prep = Prepared::new(u, kind);
    let pass = anchor_pass(&prep, nbrs, tau)?;
    let loss = pass.iter().map(|&(_, t)| t).sum();
    let log_z: Vec<f64> = pass.iter().map(|&(z, _)| z).collect();
    let grad = gradient_pass(&prep, nbrs, tau, kind, &log_z, mode)?;
    Ok((loss, grad))
}

/// Averaged squared distance of `U` to `sign(U)`.
pub fn quantization_loss(u: &DenseMatrix) -> f64 {
    let nk = u.as_slice().len() as f64;
    u.as_slice()
        .iter()
        .map(|&v| (v - sign(v)).powi(2))
        .sum::<f64>()
        / nk
}

/// `2/(NK)·(U − sign(U))`, treating `sign(U)` as constant.
pub fn quantization_grad(u: &DenseMatrix) -> DenseMatrix {
    let nk = u.as_slice().len() as f64;
    u.map(|v| 2.0 / nk * (v - sign(v)))
}

fn column_means(u: &DenseMatrix) -> Vec<f64> {
    let mut means = vec![0.0; u.cols()];
    for i in 0..u.rows() {
        for (m, &v) in means.iter_mut().zip(u.row(i)) {
            *m += v;
        }
    }
    let n = u.rows() as f64;
    means.iter_mut().for_each(|m| *m /= n);
    means
}

/// Mean over bits of the squared column mean.
pub fn bit_balance_loss(u: &DenseMatrix) -> f64 {
    let means = column_means(u);
    means.iter().map(|m| m * m).sum::<f64>() / u.cols() as f64
}

/// `2/(NK)` times the column mean, broadcast down each column.
pub fn bit_balance_grad(u: &DenseMatrix) -> DenseMatrix {
    let means = column_means(u);
    let scale = 2.0 / (u.rows() * u.cols()) as f64;
    DenseMatrix::from_fn(u.rows(), u.cols(), |_, k| scale * means[k])
}

fn check_views(nbrs: &NeighborSets, lambda: &[f64]) -> Result<()> {
    if nbrs.n_views() != lambda.len() {
        return Err(Error::Dimension(format!(
            "{} views of neighbors but {} view weights",
            nbrs.n_views(),
            lambda.len()
        )));
    }
    Ok(())
}

/// Value of the full objective and its parts.
pub fn total_objective(
    u: &DenseMatrix,
    nbrs: &NeighborSets,
    lambda: &[f64],
    hp: &HyperParams,
) -> Result<LossBreakdown> {
    check_views(nbrs, lambda)?;
    let l_c = nbrs
        .per_view
        .iter()
        .map(|nb| contrastive_loss(u, nb, hp.tau, hp.sim_kind))
        .collect::<Result<Vec<_>>>()?;
    Ok(LossBreakdown::compose(
        l_c,
        quantization_loss(u),
        bit_balance_loss(u),
        lambda,
        hp,
    ))
}

/// Gradient of the full objective; the view-weight regularizer does not
/// depend on `U`.
pub fn total_grad(
    u: &DenseMatrix,
    nbrs: &NeighborSets,
    lambda: &[f64],
    hp: &HyperParams,
    mode: GradientMode,
) -> Result<DenseMatrix> {
    Ok(objective_and_grad(u, nbrs, lambda, hp, mode)?.1)
}

/// Objective and gradient in one sweep over the similarity rows.
pub fn objective_and_grad(
    u: &DenseMatrix,
    nbrs: &NeighborSets,
    lambda: &[f64],
    hp: &HyperParams,
    mode: GradientMode,
) -> Result<(LossBreakdown, DenseMatrix)> {
    check_views(nbrs, lambda)?;
    let mut grad = DenseMatrix::zeros(u.rows(), u.cols());
    let mut l_c = Vec::with_capacity(lambda.len());
    for (nb, &w) in nbrs.per_view.iter().zip(lambda) {
        let (loss, g) = contrastive_loss_and_grad(u, nb, hp.tau, hp.sim_kind, mode)?;
        l_c.push(loss);
        axpy(&mut grad, w, &g);
    }
    if hp.alpha != 0.0 {
        axpy(&mut grad, hp.alpha, &quantization_grad(u));
    }
    if hp.beta != 0.0 {
        axpy(&mut grad, hp.beta, &bit_balance_grad(u));
    }
    let breakdown =
        LossBreakdown::compose(l_c, quantization_loss(u), bit_balance_loss(u), lambda, hp);
    Ok((breakdown, grad))
}

fn axpy(acc: &mut DenseMatrix, a: f64, x: &DenseMatrix) {
    for (y, &v) in acc.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *y += a * v;
    }
}

/// Closed-form minimizer of `λ·L_C + η·λ^γ` for each view:
/// `λ = (−L_C/(η·γ))^{1/(γ−1)}`.
pub fn update_view_weights(l_c_per_view: &[f64], eta: f64, gamma: f64) -> Result<Vec<f64>> {
    if gamma == 1.0 || gamma == 0.0 {
        return Err(Error::HyperParam(format!(
            "gamma must differ from 0 and 1 for the view-weight update, got {gamma}"
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::HyperParam(format!("eta must be positive, got {eta}")));
    }
    let exponent = 1.0 / (gamma - 1.0);
    l_c_per_view
        .iter()
        .map(|&l| {
            let base = -l / (eta * gamma);
            let integral = exponent.fract() == 0.0;
            if !(base > 0.0) && !(integral && base.is_finite()) {
                return Err(Error::ViewWeightBase { base });
            }
            let w = base.powf(exponent);
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::ViewWeightBase { base });
            }
            Ok(w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nb(rows: Vec<Vec<usize>>) -> Neighbors {
        Neighbors::from_rows(rows).unwrap()
    }

    #[test]
    fn single_candidate_softmax_is_zero() {
        let u = DenseMatrix::from_rows(&[[0.3, -1.2], [2.0, 0.7]]).unwrap();
        let n = nb(vec![vec![1], vec![0]]);
        for kind in [SimilarityKind::Dot, SimilarityKind::Cosine] {
            assert!(contrastive_loss(&u, &n, 0.2, kind).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn three_node_cosine_example() {
        let u = DenseMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        // only anchor 0 has a positive that matters; give the others positives
        // whose terms we subtract out below
        let n = nb(vec![vec![1], vec![0], vec![0]]);
        let total = contrastive_loss(&u, &n, 1.0, SimilarityKind::Cosine).unwrap();
        let expected_0 = (1.0 + (-1.0f64).exp()).ln();
        // anchor 1 is symmetric to anchor 0; anchor 2 sees 0 and 1 at cosine 0
        let expected_2 = 2.0f64.ln();
        assert!((total - (2.0 * expected_0 + expected_2)).abs() < 1e-12);
        assert!((expected_0 - 0.31326).abs() < 1e-5);
    }

    #[test]
    fn quantization_examples() {
        let u = DenseMatrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        assert_eq!(quantization_loss(&u), 0.0);
        assert!(quantization_grad(&u).as_slice().iter().all(|&v| v == 0.0));
        let u = DenseMatrix::from_rows(&[[0.5]]).unwrap();
        assert_eq!(quantization_loss(&u), 0.25);
        assert_eq!(quantization_grad(&u).as_slice(), &[-1.0]);
        let u = DenseMatrix::from_rows(&[[0.0]]).unwrap();
        assert_eq!(quantization_loss(&u), 1.0);
    }

    #[test]
    fn bit_balance_examples() {
        let u = DenseMatrix::from_rows(&[[1.0, -2.0], [-1.0, 2.0]]).unwrap();
        assert_eq!(bit_balance_loss(&u), 0.0);
        let ones = DenseMatrix::from_fn(5, 3, |_, _| 1.0);
        assert_eq!(bit_balance_loss(&ones), 1.0);
        let g = bit_balance_grad(&ones);
        assert!(g.as_slice().iter().all(|&v| (v - 2.0 / 15.0).abs() < 1e-15));
    }

    #[test]
    fn view_weight_examples() {
        let w = update_view_weights(&[4.0, 0.25], 1.0, -4.0).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert!((w[1] - 0.0625f64.powf(-0.2)).abs() < 1e-15);
        assert!((w[1] - 1.7411).abs() < 1e-4);
    }

    #[test]
    fn view_weight_rejects_bad_sign() {
        // gamma > 1 with positive loss gives a negative base and exponent 1/(γ−1) = 0.4
        let err = update_view_weights(&[1.0], 1.0, 3.5).unwrap_err();
        assert!(err.to_string().contains("gamma < 0"), "{err}");
        assert!(update_view_weights(&[1.0], 1.0, 1.0).is_err());
        assert!(update_view_weights(&[0.0], 1.0, -4.0).is_err());
    }

    #[test]
    fn cosine_grad_rejects_zero_row() {
        let u = DenseMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let n = nb(vec![vec![1], vec![2], vec![0]]);
        assert!(matches!(
            contrastive_loss(&u, &n, 0.5, SimilarityKind::Cosine),
            Err(Error::NonFiniteSimilarity { row: 0, col: 1 })
        ));
        assert!(contrastive_loss(&u, &n, 0.5, SimilarityKind::Dot).is_ok());
        assert!(contrastive_grad(&u, &n, 0.5, SimilarityKind::Dot).is_ok());
    }

    #[test]
    fn dot_kernel_survives_large_scale() {
        let u = DenseMatrix::from_fn(6, 3, |i, j| 1e3 * ((i * 7 + j * 3) % 5) as f64 - 2e3);
        let n = nb((0..6).map(|i| vec![(i + 1) % 6]).collect());
        let l = contrastive_loss(&u, &n, 0.2, SimilarityKind::Dot).unwrap();
        assert!(l.is_finite());
        let g = contrastive_grad(&u, &n, 0.2, SimilarityKind::Dot).unwrap();
        assert!(g.is_finite());
    }
}

use serde::{Deserialize, Serialize};

use super::grid::{AffordanceGrid, OutcomeGrid};
use crate::env::TargetProjection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpreadMode {
    HardMin,
    SoftMin,
}

/// Sign of the `α·ln⟨σ⟩` term in the minimized loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UncertaintySign {
    /// `+α ln⟨σ⟩`: larger predicted uncertainty increases the loss.
    Penalize,
    /// `−α ln⟨σ⟩`: the literal additive form, which rewards uncertainty.
    Reward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProposerLossConfig {
    pub lambda_smooth: f64,
    pub alpha: f64,
    pub spread: SpreadMode,
    /// Soft-min temperature; only used with `SpreadMode::SoftMin`.
    pub tau: f64,
    pub uncertainty_sign: UncertaintySign,
}

impl Default for ProposerLossConfig {
    fn default() -> Self {
        Self {
            lambda_smooth: 0.05,
            alpha: 0.01,
            spread: SpreadMode::HardMin,
            tau: 0.1,
            uncertainty_sign: UncertaintySign::Penalize,
        }
    }
}

/// Loss value, its parts, and gradients w.r.t. each outcome and each vertex σ.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadLoss {
    pub total: f64,
    pub spread_term: f64,
    pub smooth_term: f64,
    pub uncertainty_term: f64,
    pub min_pairwise: f64,
    pub grad_outcomes: Vec<Vec<f64>>,
    pub grad_sigma: Option<Vec<f64>>,
}

/// Minimum distance over all unordered outcome pairs, with the first pair
/// attaining it in `(i, j)`, `i < j` enumeration order.
pub fn min_pairwise(outcomes: &[Vec<f64>]) -> (f64, (usize, usize)) {
    let mut best = (f64::INFINITY, (0, 0));
    for i in 0..outcomes.len() {
        for j in i + 1..outcomes.len() {
            let d = TargetProjection::distance(&outcomes[i], &outcomes[j]);
            if d < best.0 {
                best = (d, (i, j));
            }
        }
    }
    best
}

/// Mean distance over the grid's neighbour edges.
pub fn mean_neighbor_distance(outcomes: &[Vec<f64>], grid: &AffordanceGrid) -> f64 {
    let e = grid.edges();
    e.iter()
        .map(|&(i, j)| TargetProjection::distance(&outcomes[i], &outcomes[j]))
        .sum::<f64>()
        / e.len().max(1) as f64
}

fn add_pair_grad(grad: &mut [Vec<f64>], a: &[f64], b: &[f64], i: usize, j: usize, coeff: f64) {
    // coeff · ∂d(a, b); zero at coincident points.
    let d = TargetProjection::distance(a, b);
    if d > 0.0 {
        for k in 0..a.len() {
            let u = (a[k] - b[k]) / d;
            grad[i][k] += coeff * u;
            grad[j][k] -= coeff * u;
        }
    }
}

/// `−spread + λ·mean_edge d ± α·ln⟨σ⟩`, where spread is the minimum pairwise
/// distance (hard) or `−τ ln Σ exp(−d_ij/τ)` (soft).
pub fn spread_loss(
    outcomes: &OutcomeGrid,
    grid: &AffordanceGrid,
    cfg: &ProposerLossConfig,
) -> SpreadLoss {
    let pts = &outcomes.outcomes;
    assert!(pts.len() >= 2, "spread loss needs at least two outcomes");
    assert_eq!(pts.len(), grid.len(), "one outcome per grid vertex");
    let dim = pts[0].len();
    let mut grad = vec![vec![0.0; dim]; pts.len()];
    let (min_d, (mi, mj)) = min_pairwise(pts);

    let spread_term = match cfg.spread {
        SpreadMode::HardMin => {
            add_pair_grad(&mut grad, &pts[mi], &pts[mj], mi, mj, -1.0);
            -min_d
        }
        SpreadMode::SoftMin => {
            let tau = cfg.tau;
            let mut dists = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    dists.push((i, j, TargetProjection::distance(&pts[i], &pts[j])));
                }
            }
            // log-sum-exp shifted by the minimum distance
            let z: f64 = dists
                .iter()
                .map(|&(_, _, d)| (-(d - min_d) / tau).exp())
                .sum();
            let softmin = min_d - tau * z.ln();
            for &(i, j, d) in &dists {
                let w = (-(d - min_d) / tau).exp() / z;
                add_pair_grad(&mut grad, &pts[i], &pts[j], i, j, -w);
            }
            -softmin
        }
    };

    let mut smooth_term = 0.0;
    if cfg.lambda_smooth != 0.0 {
        smooth_term = cfg.lambda_smooth * mean_neighbor_distance(pts, grid);
        let c = cfg.lambda_smooth / grid.edges().len() as f64;
        for &(i, j) in grid.edges() {
            add_pair_grad(&mut grad, &pts[i], &pts[j], i, j, c);
        }
    }

    let (uncertainty_term, grad_sigma) = match &outcomes.sigma {
        Some(sig) if cfg.alpha != 0.0 => {
            let mean = sig.iter().sum::<f64>() / sig.len() as f64;
            let sign = match cfg.uncertainty_sign {
                UncertaintySign::Penalize => 1.0,
                UncertaintySign::Reward => -1.0,
            };
            let g = sign * cfg.alpha / (mean * sig.len() as f64);
            (sign * cfg.alpha * mean.ln(), Some(vec![g; sig.len()]))
        }
        Some(sig) => (0.0, Some(vec![0.0; sig.len()])),
        None => (0.0, None),
    };

    SpreadLoss {
        total: spread_term + smooth_term + uncertainty_term,
        spread_term,
        smooth_term,
        uncertainty_term,
        min_pairwise: min_d,
        grad_outcomes: grad,
        grad_sigma,
    }
}

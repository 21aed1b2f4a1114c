use serde::{Deserialize, Serialize};

use super::grid::AffordanceGrid;
use super::loss::{spread_loss, ProposerLossConfig};
use super::model::Proposer;
use super::rollout::rollout_predictor;
use super::ProposerError;
use crate::diffnet::{ArchConfig, Optimizer, Params};
use crate::env::EnvSampler;
use crate::predictor::Predictor;
use crate::seed::RunRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProposerConfig {
    pub arch: ArchConfig,
    pub grid_side: usize,
    pub loss: ProposerLossConfig,
    pub lr: f64,
    /// Gradient steps per epoch; each step samples a fresh environment.
    pub iterations_per_epoch: usize,
    pub epochs: usize,
    pub patience: usize,
    pub min_rel_improvement: f64,
    /// Global gradient-norm clip; `0` disables clipping.
    pub grad_clip: f64,
    /// Vertices rolled out per iteration; `0` uses the whole grid. A subsample
    /// underestimates the true minimum distance.
    pub vertex_subsample: usize,
    /// Start from a copy of the predictor trunk and keep it frozen.
    pub tie_trunk: bool,
    /// Keep the previous cycle's proposer weights instead of re-initializing.
    pub warm_start: bool,
}

impl Default for ProposerConfig {
    fn default() -> Self {
        Self {
            arch: ArchConfig::default(),
            grid_side: 9,
            loss: ProposerLossConfig::default(),
            lr: 1e-4,
            iterations_per_epoch: 50,
            epochs: 40,
            patience: 5,
            min_rel_improvement: 1e-3,
            grad_clip: 0.0,
            vertex_subsample: 0,
            tie_trunk: false,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposerEpoch {
    pub epoch: usize,
    pub loss: f64,
    pub min_pairwise: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProposerTrace {
    pub epochs: Vec<ProposerEpoch>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Adam on the spread objective through a frozen predictor. Early stopping
/// uses the epoch-mean loss with the same rule as predictor training, and the
/// best epoch's parameters are restored.
pub fn train_proposer<S: EnvSampler>(
    proposer: &mut Proposer,
    predictor: &Predictor,
    sampler: &S,
    grid: &AffordanceGrid,
    cfg: &ProposerConfig,
    rng: &mut RunRng,
) -> Result<ProposerTrace, ProposerError> {
    if cfg.tie_trunk {
        proposer.tie_trunk(predictor)?;
    }
    let trunk_len = proposer.net.trunk.param_count();
    let mut opt = Optimizer::adam(cfg.lr as f32);
    if cfg.grad_clip > 0.0 {
        opt = opt.with_clip(Some(cfg.grad_clip as f32));
    }
    let mut trace = ProposerTrace::default();
    let mut best = f64::INFINITY;
    let mut best_params = proposer.net.params();
    let mut stale = 0;

    for epoch in 0..cfg.epochs {
        let (mut loss_sum, mut min_sum) = (0.0, 0.0);
        let iters = cfg.iterations_per_epoch.max(1);
        for _ in 0..iters {
            let env = sampler.sample(rng);
            let sub;
            let g = if cfg.vertex_subsample > 1 && cfg.vertex_subsample < grid.len() {
                let keep =
                    rand::seq::index::sample(rng, grid.len(), cfg.vertex_subsample).into_vec();
                sub = grid.subset(&keep);
                &sub
            } else {
                grid
            };
            let roll = rollout_predictor(proposer, predictor, &env, g)?;
            let l = spread_loss(roll.outcomes(), g, &cfg.loss);
            let mut g = roll
                .backward(&l.grad_outcomes, l.grad_sigma.as_deref())?
                .flat_params();
            drop(roll);
            if cfg.tie_trunk {
                g[..trunk_len].fill(0.0);
            }
            opt.step(&mut proposer.net, &g)?;
            loss_sum += l.total;
            min_sum += l.min_pairwise;
        }
        let loss = loss_sum / iters as f64;
        trace.epochs.push(ProposerEpoch {
            epoch,
            loss,
            min_pairwise: min_sum / iters as f64,
        });
        if !best.is_finite() || loss < best - cfg.min_rel_improvement * best.abs() {
            best = loss;
            best_params = proposer.net.params();
            trace.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                trace.stopped_early = true;
                break;
            }
        }
    }
    proposer.net.set_params(&best_params)?;
    Ok(trace)
}

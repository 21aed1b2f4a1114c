use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::collect::{collect_transitions, EpisodeSeeds};
use crate::affordance::{evaluate_grid, reachable_area, GridMetrics};
use crate::env::{EnvSampler, Environment};
use crate::predictor::{
    train_predictor, ExperienceDataset, Predictor, PredictorConfig, PredictorTrace, Provenance,
};
use crate::proposer::{
    train_proposer, AffordanceGrid, OutcomeGrid, Proposer, ProposerConfig, ProposerTrace,
};
use crate::seed::{self, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub cycles: usize,
    /// Random-action episodes per cycle, for cycles `< random_cycles`.
    pub collect_random: usize,
    pub random_cycles: usize,
    /// Proposer episodes per cycle, for cycles `≥ proposer_start_cycle`.
    pub collect_proposer: usize,
    pub proposer_start_cycle: usize,
    pub sigma_explore: f64,
    /// Affordance grid dimension.
    pub grid_dim: usize,
    pub workers: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            cycles: 3,
            collect_random: 20_000,
            random_cycles: 1,
            collect_proposer: 4_500,
            proposer_start_cycle: 1,
            sigma_explore: 0.1,
            grid_dim: 2,
            workers: 1,
        }
    }
}

impl TrainerConfig {
    pub fn random_episodes(&self, cycle: usize) -> usize {
        if cycle < self.random_cycles {
            self.collect_random
        } else {
            0
        }
    }

    pub fn proposer_episodes(&self, cycle: usize) -> usize {
        if cycle >= self.proposer_start_cycle {
            self.collect_proposer
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Rollouts per vertex, averaged; more than one only matters for noisy envs.
    pub trials: usize,
    pub reachable_samples: usize,
    /// Interpolation acceptance radius for reaching.
    pub r_max: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            trials: 1,
            reachable_samples: 100_000,
            r_max: 0.4,
        }
    }
}

/// Everything `run_cycles` needs besides the environment sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig {
    pub seed: u64,
    pub predictor: PredictorConfig,
    pub proposer: ProposerConfig,
    pub trainer: TrainerConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSummary {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub final_train_loss: Option<f64>,
    pub best_validation_loss: Option<f64>,
}

impl From<&PredictorTrace> for PredictorSummary {
    fn from(t: &PredictorTrace) -> Self {
        Self {
            epochs_run: t.epochs.len(),
            best_epoch: t.best_epoch,
            stopped_early: t.stopped_early,
            final_train_loss: t.final_train(),
            best_validation_loss: t.best_validation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycle: usize,
    pub collected_random: usize,
    pub collected_proposer: usize,
    pub dataset_size: usize,
    pub predictor: PredictorSummary,
    pub proposer: ProposerTrace,
    pub metrics: GridMetrics,
}

/// Wall-clock seconds per phase of one cycle.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub collect: f64,
    pub predictor: f64,
    pub proposer: f64,
    pub evaluate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub reachable_area: f64,
    /// Metrics of the freshly initialized proposer, before any training.
    pub initial_metrics: GridMetrics,
    pub cycles: Vec<CycleReport>,
    /// Not deterministic; kept apart so reports can be compared without it.
    pub timings: Vec<PhaseTimings>,
}

pub struct RunOutput {
    pub report: RunReport,
    pub predictor: Predictor,
    pub proposer: Proposer,
    pub dataset: ExperienceDataset,
    pub grid: AffordanceGrid,
    /// Environment outcome grid of the final proposer on the reference environment.
    pub outcomes: OutcomeGrid,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainerError {
    #[error("invalid trainer config: {0}")]
    Config(String),
    #[error("cycle {cycle}, {phase}: {source}")]
    Phase {
        cycle: usize,
        phase: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

fn phase<T, E: std::error::Error + Send + Sync + 'static>(
    cycle: usize,
    phase: &'static str,
    r: Result<T, E>,
) -> Result<T, TrainerError> {
    r.map_err(|e| TrainerError::Phase {
        cycle,
        phase,
        source: Box::new(e),
    })
}

/// Alternates collection, predictor training, proposer training and
/// evaluation. `log` receives one `key=value` progress line per phase.
pub fn run_cycles<S: EnvSampler>(
    sampler: &S,
    cfg: &CycleConfig,
    log: &mut dyn FnMut(&str),
) -> Result<RunOutput, TrainerError> {
    let t = &cfg.trainer;
    if t.cycles == 0 {
        return Err(TrainerError::Config("cycles must be at least 1".into()));
    }
    if t.random_episodes(0) + t.proposer_episodes(0) == 0 {
        return Err(TrainerError::Config("cycle 0 collects nothing".into()));
    }
    let reference = sampler.reference();
    let grid = AffordanceGrid::new(t.grid_dim, cfg.proposer.grid_side);
    let mut dataset = ExperienceDataset::new(
        reference.sensor_dim(),
        reference.action_bounds().dim(),
        cfg.predictor.validation_fraction,
        seed::derive(cfg.seed, &[stream::SPLIT]),
    );
    let area = reachable_area(
        &reference,
        cfg.eval.reachable_samples,
        &mut seed::rng(cfg.seed, &[stream::EVAL, u64::MAX]),
    );
    let mut proposer = Proposer::build(
        &reference,
        &cfg.proposer.arch,
        t.grid_dim,
        &mut seed::rng(cfg.seed, &[stream::PROPOSER_INIT, 0]),
    );
    let (_, initial_metrics) = phase(
        0,
        "evaluate",
        evaluate_grid(
            &proposer,
            None,
            &reference,
            &grid,
            cfg.eval.trials,
            area,
            &mut seed::rng(cfg.seed, &[stream::EVAL, u64::MAX - 1]),
        ),
    )?;
    log(&format!(
        "phase=init reachable_area={area:.6} min_pairwise={:.6}",
        initial_metrics.min_pairwise
    ));
    let mut predictor: Option<Predictor> = None;
    let mut cycles = Vec::new();
    let mut timings = Vec::new();
    let mut outcomes = None;

    for c in 0..t.cycles {
        let mut time = PhaseTimings::default();
        let seeds = EpisodeSeeds {
            master: cfg.seed,
            cycle: c,
        };

        let clock = Instant::now();
        let (nr, np) = (t.random_episodes(c), t.proposer_episodes(c));
        let random = phase(
            c,
            "collect",
            collect_transitions(sampler, None, nr, 0.0, seeds, t.workers),
        )?;
        let derived = phase(
            c,
            "collect",
            collect_transitions(
                sampler,
                Some(&proposer),
                np,
                t.sigma_explore,
                seeds,
                t.workers,
            ),
        )?;
        let (added_r, added_p) = (random.len(), derived.len());
        phase(
            c,
            "collect",
            dataset.extend(random.into_iter().chain(derived)),
        )?;
        time.collect = clock.elapsed().as_secs_f64();
        log(&format!(
            "cycle={c} phase=collect random={added_r} proposer={added_p} dataset={} seconds={:.2}",
            dataset.len(),
            time.collect
        ));

        let clock = Instant::now();
        let mut pred = match predictor.take() {
            Some(p) if cfg.predictor.warm_start => p,
            _ => Predictor::build(
                &reference,
                &cfg.predictor.arch,
                cfg.predictor.mode,
                cfg.predictor.residual,
                &mut seed::rng(cfg.seed, &[stream::PREDICTOR_INIT, c as u64]),
            ),
        };
        let trace = phase(
            c,
            "predictor",
            train_predictor(
                &mut pred,
                &reference,
                &dataset,
                &cfg.predictor,
                &mut seed::rng(cfg.seed, &[stream::PREDICTOR_TRAIN, c as u64]),
            ),
        )?;
        time.predictor = clock.elapsed().as_secs_f64();
        let summary = PredictorSummary::from(&trace);
        log(&format!(
            "cycle={c} phase=predictor epochs={} train_loss={:.6} val_loss={:.6} seconds={:.2}",
            summary.epochs_run,
            summary.final_train_loss.unwrap_or(f64::NAN),
            summary.best_validation_loss.unwrap_or(f64::NAN),
            time.predictor
        ));

        let clock = Instant::now();
        if !cfg.proposer.warm_start && c > 0 {
            proposer = Proposer::build(
                &reference,
                &cfg.proposer.arch,
                t.grid_dim,
                &mut seed::rng(cfg.seed, &[stream::PROPOSER_INIT, c as u64]),
            );
        }
        let ptrace = phase(
            c,
            "proposer",
            train_proposer(
                &mut proposer,
                &pred,
                sampler,
                &grid,
                &cfg.proposer,
                &mut seed::rng(cfg.seed, &[stream::PROPOSER_TRAIN, c as u64]),
            ),
        )?;
        time.proposer = clock.elapsed().as_secs_f64();
        log(&format!(
            "cycle={c} phase=proposer epochs={} loss={:.6} seconds={:.2}",
            ptrace.epochs.len(),
            ptrace
                .epochs
                .get(ptrace.best_epoch)
                .map_or(f64::NAN, |e| e.loss),
            time.proposer
        ));

        let clock = Instant::now();
        let (out, metrics) = phase(
            c,
            "evaluate",
            evaluate_grid(
                &proposer,
                Some(&pred),
                &reference,
                &grid,
                cfg.eval.trials,
                area,
                &mut seed::rng(cfg.seed, &[stream::EVAL, c as u64]),
            ),
        )?;
        time.evaluate = clock.elapsed().as_secs_f64();
        log(&format!(
            "cycle={c} phase=evaluate min_pairwise={:.6} mean_neighbor={:.6} hull_area={:.6} coverage_fraction={:.6} prediction_rmse={:.6}",
            metrics.min_pairwise,
            metrics.mean_neighbor,
            metrics.hull_area,
            metrics.coverage_fraction,
            metrics.prediction_rmse.unwrap_or(f64::NAN)
        ));

        cycles.push(CycleReport {
            cycle: c,
            collected_random: added_r,
            collected_proposer: added_p,
            dataset_size: dataset.len(),
            predictor: summary,
            proposer: ptrace,
            metrics,
        });
        timings.push(time);
        outcomes = Some(out);
        predictor = Some(pred);
    }

    debug_assert_eq!(
        dataset.count_by(Provenance::Random) + dataset.count_by(Provenance::ProposerDerived),
        dataset.len()
    );
    Ok(RunOutput {
        report: RunReport {
            seed: cfg.seed,
            reachable_area: area,
            initial_metrics,
            cycles,
            timings,
        },
        predictor: predictor.expect("at least one cycle"),
        proposer,
        dataset,
        grid,
        outcomes: outcomes.expect("at least one cycle"),
    })
}

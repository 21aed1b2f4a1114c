//! The outer loop: collect experience, retrain the predictor, retrain the
//! proposer against it, evaluate, repeat.

mod collect;
mod cycle;

pub use collect::{collect_transitions, EpisodeSeeds};
pub use cycle::{
    run_cycles, CycleConfig, CycleReport, EvalConfig, PhaseTimings, PredictorSummary, RunOutput,
    RunReport, TrainerConfig, TrainerError,
};

//! The affordance-conditioned proposer, its training grid, the spread
//! objective, and rollouts through the environment or the predictor.

mod grid;
mod loss;
mod model;
mod rollout;
mod train;

use crate::diffnet::NetError;
use crate::env::EnvError;

pub use grid::{AffordanceGrid, OutcomeGrid, OutcomeSource};
pub use loss::{
    mean_neighbor_distance, min_pairwise, spread_loss, ProposerLossConfig, SpreadLoss, SpreadMode,
    UncertaintySign,
};
pub use model::Proposer;
pub use rollout::{rollout_env, rollout_env_blanked, rollout_predictor, PredictorRollout};
pub use train::{train_proposer, ProposerConfig, ProposerEpoch, ProposerTrace};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProposerError {
    #[error("affordance has {got} entries, expected {expected}")]
    OmegaLength { expected: usize, got: usize },
    #[error("affordance entry {index} = {value} outside [-1, 1]")]
    OmegaOutOfRange { index: usize, value: f64 },
    #[error("horizon {horizon} needs predictor targets that are sensor vectors")]
    MultiStepTarget { horizon: usize },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

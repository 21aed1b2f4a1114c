//! Forward model of the environment, its experience dataset, and training.
//!
//! The predictor stands in for the environment while the proposer is
//! optimized: it is differentiable, so outcome gradients can flow back into
//! the proposer's parameters.

mod dataset;
mod model;
mod train;

pub use dataset::{DatasetError, ExperienceDataset, Provenance, Transition};
pub use model::{
    nll_loss, GaussianPrediction, PredTape, PredictionMode, Predictor, LOG_SIGMA_MAX, LOG_SIGMA_MIN,
};
pub use train::{
    evaluate_loss, inject_noise, train_predictor, EpochLoss, PredictorConfig, PredictorTrace,
    PreparedData, TrainError,
};

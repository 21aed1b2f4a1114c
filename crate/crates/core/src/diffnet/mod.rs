//! Minimal reverse-mode differentiable networks.
//!
//! A [`Network`] is a sequential stack of [`Layer`]s. A batched forward pass
//! returns a [`Tape`] holding every intermediate activation; one backward
//! sweep over the tape yields exact gradients with respect to all parameters
//! and all inputs. Rollout chains (proposer → predictor → proposer ...) are
//! built by keeping one tape per link and sweeping them in reverse.

mod arch;
mod fusion;
mod layer;
mod matrix;
mod network;
mod optim;

pub use arch::{Activation, ArchConfig};
pub use fusion::{FusionGrads, FusionNet, FusionTape};
pub use layer::{Layer, LayerKind};
pub use matrix::{Matrix, Real};
pub use network::{Grads, Network, Params, Tape};
pub use optim::{Optimizer, OptimizerKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetError {
    #[error("shape mismatch at layer {layer}: expected width {expected}, got {got}")]
    Shape {
        layer: usize,
        expected: usize,
        got: usize,
    },
    #[error("output gradient shape {got:?} does not match recorded output {expected:?}")]
    TapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("parameter vector length {got} does not match network ({expected})")]
    ParamLength { expected: usize, got: usize },
    #[error("non-finite gradient entry at index {index}; step refused")]
    NonFiniteGradient { index: usize },
}

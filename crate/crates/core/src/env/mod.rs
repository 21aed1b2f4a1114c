//! Environments: a planar eight-joint reacher with disc obstacles and a
//! clock-driven locomotion surrogate, plus the target-space projection.

mod linear;
mod loco;
mod reacher;

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed::RunRng;

pub use linear::{LinearEnv, LinearSampler};
pub use loco::{
    loco_rollout, loco_step, LocoParams, LocoSampler, LocoSurrogate, Pose, LOCO_ACTION_DIM,
    LOCO_SENSOR_DIM,
};
pub use reacher::{
    occupancy_sensor, reacher_kinematics, segment_disc_distance, Disc, ObstacleConfig, Reacher2D,
    ReacherSampler, JOINTS, JOINT_LIMIT, OCCUPANCY_CELLS, OCCUPANCY_SIDE, REACH, SEGMENT_LENGTH,
    SWEEP_SUBSTEPS, WORKSPACE,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("joint {joint} angle {angle} outside ±{limit}")]
    JointLimit {
        joint: usize,
        angle: f64,
        limit: f64,
    },
    #[error("action has {got} entries, expected {expected}")]
    ActionLength { expected: usize, got: usize },
    #[error("action entry {index} = {value} outside [{lo}, {hi}]")]
    ActionBounds {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

/// Slack allowed when checking bounds, absorbing `f32` round-off from
/// network outputs (the `f32` value of π/2 exceeds the `f64` one).
pub const BOUND_SLACK: f64 = 1e-6;

/// Per-dimension action box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ActionBounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(
            lo.iter().zip(&hi).all(|(l, h)| l < h),
            "empty action interval"
        );
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn check(&self, action: &[f64]) -> Result<(), EnvError> {
        if action.len() != self.dim() {
            return Err(EnvError::ActionLength {
                expected: self.dim(),
                got: action.len(),
            });
        }
        for (index, ((&value, &lo), &hi)) in action.iter().zip(&self.lo).zip(&self.hi).enumerate() {
            if !(value >= lo - BOUND_SLACK && value <= hi + BOUND_SLACK) {
                return Err(EnvError::ActionBounds {
                    index,
                    value,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, action: &[f64]) -> bool {
        self.check(action).is_ok()
    }

    pub fn clamp(&self, action: &mut [f64]) {
        for ((a, &lo), &hi) in action.iter_mut().zip(&self.lo).zip(&self.hi) {
            *a = a.clamp(lo, hi);
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| rng.random_range(l..h))
            .collect()
    }

    /// `(scale, shift)` such that `scale·u + shift` maps `[-1, 1]` onto the box.
    pub fn unit_map(&self) -> (Vec<f64>, Vec<f64>) {
        let scale = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (h - l))
            .collect();
        let shift = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (h + l))
            .collect();
        (scale, shift)
    }
}

/// Named slices of a sensor vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorLayout {
    pub slices: Vec<(&'static str, Range<usize>)>,
}

impl SensorLayout {
    pub fn dim(&self) -> usize {
        self.slices.iter().map(|(_, r)| r.end).max().unwrap_or(0)
    }

    pub fn slice(&self, name: &str) -> Option<Range<usize>> {
        self.slices
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, r)| r.clone())
    }
}

/// Selects target-space coordinates from a vector and measures distances
/// between them with the Euclidean metric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetProjection {
    pub indices: Vec<usize>,
}

impl TargetProjection {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| v[i]).collect()
    }

    pub fn distance(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// A resettable, steppable environment with a fixed sensor layout.
pub trait Environment: Clone + Send + Sync {
    fn layout(&self) -> SensorLayout;

    fn sensor_dim(&self) -> usize {
        self.layout().dim()
    }

    fn action_bounds(&self) -> ActionBounds;

    /// Steps per episode.
    fn horizon(&self) -> usize;

    fn observe(&self) -> Vec<f64>;

    /// Applies one action and returns the next sensor vector.
    fn step(&mut self, action: &[f64], rng: &mut RunRng) -> Result<Vec<f64>, EnvError>;

    /// Target-space outcome of the current state.
    fn outcome(&self) -> Vec<f64>;

    /// Regression target the predictor learns for a transition ending in `next_sensor`.
    fn predictor_target(&self, next_sensor: &[f64]) -> Vec<f64>;

    /// Where the outcome lives inside a predictor target vector.
    fn prediction_projection(&self) -> TargetProjection;

    /// Whether a predictor target is itself a sensor vector, so predictions can
    /// be fed back for multi-step rollouts.
    fn prediction_is_sensor(&self) -> bool;

    /// Fixed `(scale, shift)` normalizing raw sensor values to roughly unit range.
    fn sensor_normalization(&self) -> (Vec<f64>, Vec<f64>);

    /// Action distribution for reachable-set estimation. Defaults to uniform.
    fn coverage_action(&self, rng: &mut RunRng) -> Vec<f64> {
        self.action_bounds().sample_uniform(rng)
    }

    /// Sensor slice describing external context (obstacles), blanked for
    /// transplant comparisons. `None` when the environment has no context.
    fn context_slice(&self) -> Option<Range<usize>> {
        None
    }
}

/// Produces environment instances for training episodes and evaluation.
pub trait EnvSampler: Send + Sync {
    type Env: Environment;

    /// Fresh environment for one episode or training iteration.
    fn sample(&self, rng: &mut RunRng) -> Self::Env;

    /// Fixed environment used for reporting grid metrics.
    fn reference(&self) -> Self::Env;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn euclidean_metric_axioms(
            a in proptest::collection::vec(-10.0..10.0f64, 2),
            b in proptest::collection::vec(-10.0..10.0f64, 2),
            c in proptest::collection::vec(-10.0..10.0f64, 2),
        ) {
            let d = TargetProjection::distance;
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        }
    }

    #[test]
    fn bounds_reject_out_of_box_and_clamp() {
        let b = ActionBounds::new(vec![0.0, -1.0], vec![1.0, 1.0]);
        assert!(b.contains(&[0.5, 0.0]));
        assert!(matches!(
            b.check(&[1.5, 0.0]),
            Err(EnvError::ActionBounds { index: 0, .. })
        ));
        assert!(matches!(
            b.check(&[0.5]),
            Err(EnvError::ActionLength { .. })
        ));
        let mut a = [2.0, -3.0];
        b.clamp(&mut a);
        assert_eq!(a, [1.0, -1.0]);
        let (s, t) = b.unit_map();
        assert_eq!((s, t), (vec![0.5, 1.0], vec![0.5, 0.0]));
    }
}

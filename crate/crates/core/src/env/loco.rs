use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ActionBounds, EnvError, EnvSampler, Environment, SensorLayout, TargetProjection};
use crate::seed::RunRng;

/// Planar body pose.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Dynamics constants of the locomotion surrogate.
///
/// Forward speed is the phase-coherence `e = ½(1 + cos(φ_L − φ_R))` times the
/// mean leg amplitude. Driving both legs past `slip_threshold` switches the
/// speed noise from `sigma_base` to `sigma_slip`, creating a discontinuous,
/// heteroscedastic outcome landscape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocoParams {
    pub horizon: usize,
    pub dt: f64,
    pub c_turn: f64,
    pub slip_threshold: f64,
    pub sigma_slip: f64,
    pub sigma_base: f64,
    /// Multiplies every noise draw; 0 suppresses noise without disturbing the rng stream.
    pub noise_scale: f64,
}

impl Default for LocoParams {
    fn default() -> Self {
        Self {
            horizon: 5,
            dt: 1.0,
            c_turn: 0.6,
            slip_threshold: 1.5,
            sigma_slip: 0.3,
            sigma_base: 0.02,
            noise_scale: 1.0,
        }
    }
}

impl LocoParams {
    pub fn noiseless(mut self) -> Self {
        self.noise_scale = 0.0;
        self
    }

    pub fn speed_sigma(&self, amp_left: f64, amp_right: f64) -> f64 {
        if amp_left + amp_right > self.slip_threshold {
            self.sigma_slip
        } else {
            self.sigma_base
        }
    }
}

pub const LOCO_ACTION_DIM: usize = 4;
pub const LOCO_SENSOR_DIM: usize = 5;

fn loco_bounds() -> ActionBounds {
    ActionBounds::new(vec![0.0, 0.0, -PI, -PI], vec![1.0, 1.0, PI, PI])
}

/// One gait step. `action = (A_L, A_R, φ_L, φ_R)`. Exactly one standard
/// normal draw is consumed per call.
pub fn loco_step(
    pose: Pose,
    action: &[f64],
    params: &LocoParams,
    rng: &mut RunRng,
) -> Result<Pose, EnvError> {
    loco_bounds().check(action)?;
    let (al, ar, pl, pr) = (action[0], action[1], action[2], action[3]);
    let coherence = 0.5 * (1.0 + (pl - pr).cos());
    let z: f64 = StandardNormal.sample(rng);
    let v = coherence * (al + ar) / 2.0 + params.noise_scale * params.speed_sigma(al, ar) * z;
    let turn = params.c_turn * (ar - al);
    let theta = pose.theta + turn * params.dt;
    Ok(Pose {
        x: pose.x + v * params.dt * theta.cos(),
        y: pose.y + v * params.dt * theta.sin(),
        theta,
    })
}

/// Applies `policy` step by step from `start`.
pub fn loco_rollout(
    start: Pose,
    policy: &[[f64; 4]],
    params: &LocoParams,
    rng: &mut RunRng,
) -> Result<Pose, EnvError> {
    policy
        .iter()
        .try_fold(start, |pose, a| loco_step(pose, a, params, rng))
}

/// Multi-step locomotion environment. Sensor is
/// `(x, y, cos θ, sin θ, step/h)`; the outcome is the final planar position.
#[derive(Debug, Clone, PartialEq)]
pub struct LocoSurrogate {
    pub params: LocoParams,
    pose: Pose,
    start: Pose,
    step: usize,
}

impl LocoSurrogate {
    pub fn new(start: Pose, params: LocoParams) -> Self {
        Self {
            params,
            pose: start,
            start,
            step: 0,
        }
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn reset(&mut self) {
        self.pose = self.start;
        self.step = 0;
    }

    pub fn sensor_of(pose: Pose, step: usize, horizon: usize) -> Vec<f64> {
        vec![
            pose.x,
            pose.y,
            pose.theta.cos(),
            pose.theta.sin(),
            step as f64 / horizon as f64,
        ]
    }
}

impl Environment for LocoSurrogate {
    fn layout(&self) -> SensorLayout {
        SensorLayout {
            slices: vec![("position", 0..2), ("heading", 2..4), ("clock", 4..5)],
        }
    }

    fn action_bounds(&self) -> ActionBounds {
        loco_bounds()
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    fn observe(&self) -> Vec<f64> {
        Self::sensor_of(self.pose, self.step, self.params.horizon)
    }

    fn step(&mut self, action: &[f64], rng: &mut RunRng) -> Result<Vec<f64>, EnvError> {
        self.pose = loco_step(self.pose, action, &self.params, rng)?;
        self.step += 1;
        Ok(self.observe())
    }

    fn outcome(&self) -> Vec<f64> {
        vec![self.pose.x, self.pose.y]
    }

    fn predictor_target(&self, next_sensor: &[f64]) -> Vec<f64> {
        next_sensor.to_vec()
    }

    fn prediction_projection(&self) -> TargetProjection {
        TargetProjection::new(vec![0, 1])
    }

    fn prediction_is_sensor(&self) -> bool {
        true
    }

    fn sensor_normalization(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.25, 0.25, 1.0, 1.0, 1.0], vec![0.0; LOCO_SENSOR_DIM])
    }
}

/// Every episode starts at the origin facing +x.
#[derive(Debug, Clone, Default)]
pub struct LocoSampler {
    pub params: LocoParams,
}

impl EnvSampler for LocoSampler {
    type Env = LocoSurrogate;

    fn sample(&self, _rng: &mut RunRng) -> LocoSurrogate {
        self.reference()
    }

    fn reference(&self) -> LocoSurrogate {
        LocoSurrogate::new(Pose::default(), self.params.clone())
    }
}

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    ActionBounds, EnvError, EnvSampler, Environment, SensorLayout, TargetProjection, BOUND_SLACK,
};
use crate::seed::RunRng;

pub const JOINTS: usize = 8;
pub const SEGMENT_LENGTH: f64 = 0.5;
/// Total arm length; also the radius bound of every tip position.
pub const REACH: f64 = SEGMENT_LENGTH * JOINTS as f64;
pub const JOINT_LIMIT: f64 = FRAC_PI_2;
pub const SWEEP_SUBSTEPS: usize = 32;
/// Half-width of the square workspace covered by the occupancy sensor.
pub const WORKSPACE: f64 = 4.0;
pub const OCCUPANCY_SIDE: usize = 8;
pub const OCCUPANCY_CELLS: usize = OCCUPANCY_SIDE * OCCUPANCY_SIDE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Random obstacle generation. Centers are uniform by area over the annulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObstacleConfig {
    pub min_count: usize,
    pub max_count: usize,
    pub ring_inner: f64,
    pub ring_outer: f64,
    pub radius_min: f64,
    pub radius_max: f64,
    /// Move each center to the middle of its occupancy cell.
    pub snap_to_cells: bool,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        Self {
            min_count: 0,
            max_count: 4,
            ring_inner: 1.5,
            ring_outer: 3.5,
            radius_min: 0.3,
            radius_max: 0.8,
            snap_to_cells: false,
        }
    }
}

/// Tip position for the given joint angles.
pub fn reacher_kinematics(angles: &[f64]) -> Result<[f64; 2], EnvError> {
    check_angles(angles)?;
    Ok(*joint_positions(angles).last().expect("joints present"))
}

fn check_angles(angles: &[f64]) -> Result<(), EnvError> {
    if angles.len() != JOINTS {
        return Err(EnvError::ActionLength {
            expected: JOINTS,
            got: angles.len(),
        });
    }
    for (joint, &angle) in angles.iter().enumerate() {
        if !(angle.abs() <= JOINT_LIMIT + BOUND_SLACK) {
            return Err(EnvError::JointLimit {
                joint,
                angle,
                limit: JOINT_LIMIT,
            });
        }
    }
    Ok(())
}

/// Base, every joint, and the tip: `JOINTS + 1` points.
fn joint_positions(angles: &[f64]) -> [[f64; 2]; JOINTS + 1] {
    let mut pts = [[0.0; 2]; JOINTS + 1];
    let mut heading = 0.0;
    for (i, &a) in angles.iter().enumerate() {
        heading += a;
        pts[i + 1] = [
            pts[i][0] + SEGMENT_LENGTH * heading.cos(),
            pts[i][1] + SEGMENT_LENGTH * heading.sin(),
        ];
    }
    pts
}

/// Distance from a point to the closed segment `[a, b]`.
pub fn segment_disc_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0] - p[0], a[1] + t * d[1] - p[1]];
    (q[0] * q[0] + q[1] * q[1]).sqrt()
}

fn collides(angles: &[f64], obstacles: &[Disc]) -> bool {
    if obstacles.is_empty() {
        return false;
    }
    let pts = joint_positions(angles);
    pts.windows(2).any(|seg| {
        obstacles
            .iter()
            .any(|o| segment_disc_distance(seg[0], seg[1], o.center) <= o.radius)
    })
}

/// 8×8 occupancy over `[-4, 4]²`; cell `(r, c)` spans `x ∈ [-4 + c, -3 + c]`,
/// `y ∈ [-4 + r, -3 + r]` and is stored at index `r·8 + c`.
pub fn occupancy_sensor(obstacles: &[Disc]) -> Vec<f64> {
    let cell = 2.0 * WORKSPACE / OCCUPANCY_SIDE as f64;
    let mut out = vec![0.0; OCCUPANCY_CELLS];
    for r in 0..OCCUPANCY_SIDE {
        for c in 0..OCCUPANCY_SIDE {
            let (x0, y0) = (-WORKSPACE + c as f64 * cell, -WORKSPACE + r as f64 * cell);
            let hit = obstacles.iter().any(|o| {
                let qx = o.center[0].clamp(x0, x0 + cell) - o.center[0];
                let qy = o.center[1].clamp(y0, y0 + cell) - o.center[1];
                qx * qx + qy * qy <= o.radius * o.radius
            });
            if hit {
                out[r * OCCUPANCY_SIDE + c] = 1.0;
            }
        }
    }
    out
}

/// Planar eight-joint arm reaching around disc obstacles. One action sets
/// target joint angles; the arm sweeps toward them and stops at the last
/// collision-free substep.
#[derive(Debug, Clone, PartialEq)]
pub struct Reacher2D {
    obstacles: Vec<Disc>,
    occupancy: Vec<f64>,
    angles: [f64; JOINTS],
}

impl Reacher2D {
    pub fn new(obstacles: Vec<Disc>) -> Self {
        let occupancy = occupancy_sensor(&obstacles);
        Self {
            obstacles,
            occupancy,
            angles: [0.0; JOINTS],
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new())
    }

    /// Draws obstacles, resampling whole environments until the rest pose is free.
    pub fn random<R: Rng + ?Sized>(cfg: &ObstacleConfig, rng: &mut R) -> Self {
        loop {
            let count = rng.random_range(cfg.min_count..=cfg.max_count);
            let obstacles: Vec<Disc> = (0..count)
                .map(|_| {
                    let r2 = rng.random_range(cfg.ring_inner.powi(2)..=cfg.ring_outer.powi(2));
                    let phi = rng.random_range(-PI..PI);
                    let rad = r2.sqrt();
                    let mut center = [rad * phi.cos(), rad * phi.sin()];
                    if cfg.snap_to_cells {
                        let cell = 2.0 * WORKSPACE / OCCUPANCY_SIDE as f64;
                        center = center.map(|v| {
                            ((v + WORKSPACE) / cell)
                                .floor()
                                .clamp(0.0, OCCUPANCY_SIDE as f64 - 1.0)
                                * cell
                                - WORKSPACE
                                + 0.5 * cell
                        });
                    }
                    Disc {
                        center,
                        radius: rng.random_range(cfg.radius_min..=cfg.radius_max),
                    }
                })
                .collect();
            if !collides(&[0.0; JOINTS], &obstacles) {
                return Self::new(obstacles);
            }
        }
    }

    pub fn obstacles(&self) -> &[Disc] {
        &self.obstacles
    }

    pub fn angles(&self) -> &[f64; JOINTS] {
        &self.angles
    }

    pub fn tip(&self) -> [f64; 2] {
        joint_positions(&self.angles)[JOINTS]
    }

    pub fn in_collision(&self, angles: &[f64]) -> bool {
        collides(angles, &self.obstacles)
    }

    /// Sweeps linearly from the current angles to `target` in
    /// [`SWEEP_SUBSTEPS`] substeps, keeping the last collision-free substep.
    /// Returns the next sensor vector and the tip outcome.
    pub fn reacher_step(&mut self, target: &[f64]) -> Result<(Vec<f64>, [f64; 2]), EnvError> {
        check_angles(target)?;
        let start = self.angles;
        let mut accepted = start;
        for j in 1..=SWEEP_SUBSTEPS {
            let t = j as f64 / SWEEP_SUBSTEPS as f64;
            let mut q = [0.0; JOINTS];
            for i in 0..JOINTS {
                let goal = target[i].clamp(-JOINT_LIMIT, JOINT_LIMIT);
                q[i] = start[i] + t * (goal - start[i]);
            }
            if collides(&q, &self.obstacles) {
                break;
            }
            accepted = q;
        }
        self.angles = accepted;
        Ok((self.observe(), self.tip()))
    }

    pub fn reset(&mut self) {
        self.angles = [0.0; JOINTS];
    }
}

impl Environment for Reacher2D {
    fn layout(&self) -> SensorLayout {
        SensorLayout {
            slices: vec![
                ("joint_angles", 0..JOINTS),
                ("occupancy", JOINTS..JOINTS + OCCUPANCY_CELLS),
            ],
        }
    }

    fn action_bounds(&self) -> ActionBounds {
        ActionBounds::new(vec![-JOINT_LIMIT; JOINTS], vec![JOINT_LIMIT; JOINTS])
    }

    fn horizon(&self) -> usize {
        1
    }

    fn observe(&self) -> Vec<f64> {
        let mut s = self.angles.to_vec();
        s.extend_from_slice(&self.occupancy);
        s
    }

    fn step(&mut self, action: &[f64], _rng: &mut RunRng) -> Result<Vec<f64>, EnvError> {
        self.reacher_step(action).map(|(s, _)| s)
    }

    fn outcome(&self) -> Vec<f64> {
        self.tip().to_vec()
    }

    /// Final joint angles followed by the tip position.
    fn predictor_target(&self, next_sensor: &[f64]) -> Vec<f64> {
        let angles = &next_sensor[..JOINTS];
        let mut t = angles.to_vec();
        t.extend_from_slice(&joint_positions(angles)[JOINTS]);
        t
    }

    fn prediction_projection(&self) -> TargetProjection {
        TargetProjection::new(vec![JOINTS, JOINTS + 1])
    }

    fn prediction_is_sensor(&self) -> bool {
        false
    }

    fn sensor_normalization(&self) -> (Vec<f64>, Vec<f64>) {
        let mut scale = vec![1.0 / JOINT_LIMIT; JOINTS];
        scale.extend(std::iter::repeat_n(1.0, OCCUPANCY_CELLS));
        (scale, vec![0.0; JOINTS + OCCUPANCY_CELLS])
    }

    /// Mixture of uniform joint angles, uniformly shrunk angles and
    /// "bend toward a heading" configurations; the last family reaches the
    /// boundary of the reachable set far more often than uniform sampling.
    fn coverage_action(&self, rng: &mut RunRng) -> Vec<f64> {
        match rng.random_range(0..3u8) {
            0 => (0..JOINTS)
                .map(|_| rng.random_range(-JOINT_LIMIT..=JOINT_LIMIT))
                .collect(),
            1 => {
                let s: f64 = rng.random_range(0.0..1.0);
                (0..JOINTS)
                    .map(|_| s * rng.random_range(-JOINT_LIMIT..=JOINT_LIMIT))
                    .collect()
            }
            _ => {
                let goal: f64 = rng.random_range(-PI..PI);
                let mut heading = 0.0;
                (0..JOINTS)
                    .map(|_| {
                        let want = (goal - heading + 0.3 * rng.random_range(-1.0..1.0))
                            .clamp(-JOINT_LIMIT, JOINT_LIMIT);
                        heading += want;
                        want
                    })
                    .collect()
            }
        }
    }

    fn context_slice(&self) -> Option<Range<usize>> {
        Some(JOINTS..JOINTS + OCCUPANCY_CELLS)
    }
}

/// Fresh random obstacle field per sample; the reference environment is empty.
#[derive(Debug, Clone, Default)]
pub struct ReacherSampler {
    pub obstacles: ObstacleConfig,
}

impl EnvSampler for ReacherSampler {
    type Env = Reacher2D;

    fn sample(&self, rng: &mut RunRng) -> Reacher2D {
        Reacher2D::random(&self.obstacles, rng)
    }

    fn reference(&self) -> Reacher2D {
        Reacher2D::empty()
    }
}

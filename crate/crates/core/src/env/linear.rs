use super::{ActionBounds, EnvError, EnvSampler, Environment, SensorLayout, TargetProjection};
use crate::seed::RunRng;

/// `s' = s + a` in the plane with a unit action box. Small enough to reason
/// about exactly; used for examples and sanity checks of the learning loop.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEnv {
    pub start: [f64; 2],
    pub horizon: usize,
    state: [f64; 2],
}

impl LinearEnv {
    pub fn new(start: [f64; 2], horizon: usize) -> Self {
        Self {
            start,
            horizon,
            state: start,
        }
    }
}

impl Environment for LinearEnv {
    fn layout(&self) -> SensorLayout {
        SensorLayout {
            slices: vec![("position", 0..2)],
        }
    }

    fn action_bounds(&self) -> ActionBounds {
        ActionBounds::new(vec![-1.0; 2], vec![1.0; 2])
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn observe(&self) -> Vec<f64> {
        self.state.to_vec()
    }

    fn step(&mut self, action: &[f64], _rng: &mut RunRng) -> Result<Vec<f64>, EnvError> {
        self.action_bounds().check(action)?;
        self.state = [self.state[0] + action[0], self.state[1] + action[1]];
        Ok(self.observe())
    }

    fn outcome(&self) -> Vec<f64> {
        self.state.to_vec()
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
        (vec![1.0; 2], vec![0.0; 2])
    }
}

/// Random start points in `[-1, 1]²`; the reference starts at the origin.
#[derive(Debug, Clone)]
pub struct LinearSampler {
    pub horizon: usize,
    pub random_start: bool,
}

impl EnvSampler for LinearSampler {
    type Env = LinearEnv;

    fn sample(&self, rng: &mut RunRng) -> LinearEnv {
        use rand::Rng;
        if self.random_start {
            LinearEnv::new(
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                self.horizon,
            )
        } else {
            self.reference()
        }
    }

    fn reference(&self) -> LinearEnv {
        LinearEnv::new([0.0, 0.0], self.horizon)
    }
}

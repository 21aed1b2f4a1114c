use std::ops::Range;

use super::grid::{AffordanceGrid, OutcomeGrid, OutcomeSource};
use super::model::Proposer;
use super::ProposerError;
use crate::diffnet::{FusionGrads, FusionTape, Matrix, NetError};
use crate::env::{Environment, TargetProjection};
use crate::predictor::{PredTape, PredictionMode, Predictor};
use crate::seed::RunRng;

pub(crate) fn omega_matrix(grid: &AffordanceGrid) -> Matrix<f32> {
    Matrix::from_vec(
        grid.len(),
        grid.dim(),
        grid.vertices()
            .iter()
            .flatten()
            .map(|&v| v as f32)
            .collect(),
    )
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

/// Runs one episode per grid vertex in copies of `env`, all vertices stepping
/// in lockstep so the proposer is evaluated as one batch per step.
pub fn rollout_env<E: Environment>(
    proposer: &Proposer,
    env: &E,
    grid: &AffordanceGrid,
    rng: &mut RunRng,
) -> Result<OutcomeGrid, ProposerError> {
    rollout_env_blanked(proposer, env, grid, None, rng)
}

/// As [`rollout_env`], but the proposer sees zeros in the `blank` sensor
/// slice while the environment keeps its true state.
pub fn rollout_env_blanked<E: Environment>(
    proposer: &Proposer,
    env: &E,
    grid: &AffordanceGrid,
    blank: Option<Range<usize>>,
    rng: &mut RunRng,
) -> Result<OutcomeGrid, ProposerError> {
    let omega = omega_matrix(grid);
    let mut envs: Vec<E> = (0..grid.len()).map(|_| env.clone()).collect();
    for _ in 0..env.horizon() {
        let mut sensors = Vec::with_capacity(grid.len() * env.sensor_dim());
        for e in &envs {
            let mut s = e.observe();
            if let Some(r) = &blank {
                s[r.clone()].fill(0.0);
            }
            sensors.extend(to_f32(&s));
        }
        let actions = proposer.propose_batch(
            &Matrix::from_vec(grid.len(), env.sensor_dim(), sensors),
            &omega,
        )?;
        for (v, e) in envs.iter_mut().enumerate() {
            let mut a: Vec<f64> = actions.row(v).iter().map(|&x| x as f64).collect();
            proposer.action_bounds().clamp(&mut a);
            e.step(&a, rng)?;
        }
    }
    Ok(OutcomeGrid {
        outcomes: envs.iter().map(|e| e.outcome()).collect(),
        sigma: None,
        source: OutcomeSource::Environment,
    })
}

/// Differentiable rollout of every vertex through a frozen predictor.
pub struct PredictorRollout<'a> {
    steps: Vec<(FusionTape<'a, f32>, PredTape<'a>)>,
    projection: TargetProjection,
    target_dim: usize,
    grid: OutcomeGrid,
}

/// Rolls the proposer forward through `predictor` from `env`'s current
/// sensor for `env.horizon()` steps, one row per vertex.
pub fn rollout_predictor<'a, E: Environment>(
    proposer: &'a Proposer,
    predictor: &'a Predictor,
    env: &E,
    grid: &AffordanceGrid,
) -> Result<PredictorRollout<'a>, ProposerError> {
    let h = env.horizon();
    if h > 1 && !env.prediction_is_sensor() {
        return Err(ProposerError::MultiStepTarget { horizon: h });
    }
    let v = grid.len();
    let omega = omega_matrix(grid);
    let s0 = to_f32(&env.observe());
    let mut s = Matrix::from_vec(
        v,
        s0.len(),
        s0.iter().copied().cycle().take(v * s0.len()).collect(),
    );
    let mut steps = Vec::with_capacity(h);
    let mut sigma_sum = vec![0.0f64; v];
    for _ in 0..h {
        let ptape = proposer.forward(s.clone(), &omega)?;
        let a = ptape.output().clone();
        let qtape = predictor.forward(s, &a)?;
        for (r, acc) in sigma_sum.iter_mut().enumerate() {
            *acc += qtape.sigma().row(r).iter().map(|&x| x as f64).sum::<f64>();
        }
        s = qtape.mean().clone();
        steps.push((ptape, qtape));
    }
    let projection = env.prediction_projection();
    let last = steps.last().expect("horizon ≥ 1").1.mean();
    let outcomes = (0..v)
        .map(|r| {
            projection
                .indices
                .iter()
                .map(|&i| last.get(r, i) as f64)
                .collect()
        })
        .collect();
    let target_dim = predictor.target_dim();
    let sigma = match predictor.mode {
        PredictionMode::Gaussian => Some(
            sigma_sum
                .into_iter()
                .map(|x| x / (h * target_dim) as f64)
                .collect(),
        ),
        PredictionMode::Point => None,
    };
    Ok(PredictorRollout {
        steps,
        projection,
        target_dim,
        grid: OutcomeGrid {
            outcomes,
            sigma,
            source: OutcomeSource::Predictor,
        },
    })
}

impl PredictorRollout<'_> {
    pub fn outcomes(&self) -> &OutcomeGrid {
        &self.grid
    }

    /// Backpropagates `dL/d outcome` and `dL/d σ̄` (per vertex) through every
    /// step into the proposer. `sensor` holds the gradient w.r.t. the start
    /// sensor and `side` the gradient w.r.t. ω summed over steps.
    pub fn backward(
        &self,
        grad_outcomes: &[Vec<f64>],
        grad_sigma: Option<&[f64]>,
    ) -> Result<FusionGrads<f32>, NetError> {
        let v = self.grid.len();
        let h = self.steps.len();
        let mut dmean = Matrix::<f32>::zeros(v, self.target_dim);
        for (r, g) in grad_outcomes.iter().enumerate() {
            for (&i, &x) in self.projection.indices.iter().zip(g) {
                dmean.set(r, i, x as f32);
            }
        }
        let dsigma = grad_sigma.map(|g| {
            let c = (h * self.target_dim) as f64;
            let data = g
                .iter()
                .flat_map(|&x| std::iter::repeat_n((x / c) as f32, self.target_dim))
                .collect();
            Matrix::from_vec(v, self.target_dim, data)
        });
        let mut acc: Option<FusionGrads<f32>> = None;
        for (ptape, qtape) in self.steps.iter().rev() {
            let (ds_pred, da) = qtape.backward_inputs(&dmean, dsigma.as_ref())?;
            let g = ptape.backward(&da)?;
            let mut ds = ds_pred;
            ds.add_assign(&g.sensor);
            acc = Some(match acc {
                None => FusionGrads {
                    sensor: ds.clone(),
                    ..g
                },
                Some(mut a) => {
                    a.trunk.iter_mut().zip(&g.trunk).for_each(|(x, y)| *x += y);
                    a.head.iter_mut().zip(&g.head).for_each(|(x, y)| *x += y);
                    a.side.add_assign(&g.side);
                    a.sensor = ds.clone();
                    a
                }
            });
            dmean = ds;
        }
        Ok(acc.expect("horizon ≥ 1"))
    }
}

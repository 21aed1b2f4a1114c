use serde::{Deserialize, Serialize};

use super::interpolate::{interpolate_affordance, InterpolationResult};
use super::metrics::{averaged_rollout, grid_metrics, GridMetrics};
use crate::env::{Environment, TargetProjection};
use crate::proposer::{AffordanceGrid, OutcomeGrid, Proposer, ProposerError};
use crate::seed::RunRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachResult {
    pub target: [f64; 2],
    pub interpolation: InterpolationResult,
    pub achieved: Vec<f64>,
    pub error: f64,
}

/// Interpolates an affordance for `target` and executes it in a copy of `env`.
#[allow(clippy::too_many_arguments)]
pub fn reach<E: Environment>(
    target: [f64; 2],
    proposer: &Proposer,
    env: &E,
    outcomes: &OutcomeGrid,
    grid: &AffordanceGrid,
    r_max: f64,
    rng: &mut RunRng,
) -> Result<ReachResult, ProposerError> {
    let interpolation = interpolate_affordance(target, outcomes, grid, r_max);
    let mut e = env.clone();
    for _ in 0..env.horizon() {
        let a = proposer.propose(&e.observe(), &interpolation.omega)?;
        e.step(&a, rng)?;
    }
    let achieved = e.outcome();
    let error = TargetProjection::distance(&achieved, &target);
    Ok(ReachResult {
        target,
        interpolation,
        achieved,
        error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransplantComparison {
    pub conditioned: OutcomeGrid,
    pub transplanted: OutcomeGrid,
    pub conditioned_metrics: GridMetrics,
    pub transplanted_metrics: GridMetrics,
}

/// Evaluates `env` once with the proposer seeing the true sensor and once
/// with its context slice (obstacle occupancy) zeroed. The physics is the
/// same in both runs.
pub fn transplant_compare<E: Environment>(
    proposer: &Proposer,
    env: &E,
    grid: &AffordanceGrid,
    trials: usize,
    reachable_area: f64,
    rng: &mut RunRng,
) -> Result<TransplantComparison, ProposerError> {
    let conditioned = averaged_rollout(proposer, env, grid, trials, None, rng)?;
    let transplanted = averaged_rollout(proposer, env, grid, trials, env.context_slice(), rng)?;
    Ok(TransplantComparison {
        conditioned_metrics: grid_metrics(&conditioned, grid, reachable_area, None),
        transplanted_metrics: grid_metrics(&transplanted, grid, reachable_area, None),
        conditioned,
        transplanted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffnet::ArchConfig;
    use crate::env::Reacher2D;
    use crate::proposer::rollout_env;
    use crate::seed;

    #[test]
    fn replaying_a_vertex_outcome_is_exact() {
        let mut rng = seed::rng(31, &[]);
        let env = Reacher2D::empty();
        let p = Proposer::build(&env, &ArchConfig::default(), 2, &mut rng);
        let g = AffordanceGrid::new(2, 9);
        let o = rollout_env(&p, &env, &g, &mut rng).unwrap();
        for i in [0, 13, 40, 80] {
            let t = [o.outcomes[i][0], o.outcomes[i][1]];
            let r = reach(t, &p, &env, &o, &g, 0.4, &mut rng).unwrap();
            assert!(r.error <= 1e-6, "vertex {i}: {}", r.error);
        }
        let far = reach([100.0, 100.0], &p, &env, &o, &g, 0.4, &mut rng).unwrap();
        assert!(far.interpolation.fallback);
        let nearest = o
            .outcomes
            .iter()
            .map(|x| TargetProjection::distance(x, &[100.0, 100.0]))
            .fold(f64::INFINITY, f64::min);
        assert!((far.error - nearest).abs() < 1e-6);
    }

    #[test]
    fn obstacle_free_transplant_is_identical() {
        let mut rng = seed::rng(32, &[]);
        let env = Reacher2D::empty();
        let p = Proposer::build(&env, &ArchConfig::default(), 2, &mut rng);
        let g = AffordanceGrid::new(2, 9);
        let c = transplant_compare(&p, &env, &g, 1, 40.0, &mut rng).unwrap();
        assert_eq!(c.conditioned, c.transplanted);
        assert_eq!(c.conditioned_metrics, c.transplanted_metrics);
    }
}

use serde::{Deserialize, Serialize};

use super::geometry::hull_area;
use crate::env::{Environment, TargetProjection};
use crate::predictor::Predictor;
use crate::proposer::{
    mean_neighbor_distance, min_pairwise, rollout_env_blanked, rollout_predictor, AffordanceGrid,
    OutcomeGrid, OutcomeSource, Proposer, ProposerError,
};
use crate::seed::RunRng;

/// Allowed excess of `coverage_fraction` over 1 from Monte Carlo error.
pub const COVERAGE_SLACK: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetrics {
    pub min_pairwise: f64,
    pub mean_neighbor: f64,
    pub hull_area: f64,
    /// `hull_area` over the estimated reachable area.
    pub coverage_fraction: f64,
    /// RMS distance between environment and predictor outcomes per vertex.
    pub prediction_rmse: Option<f64>,
}

pub(crate) fn planar(o: &[Vec<f64>]) -> Vec<[f64; 2]> {
    o.iter().map(|p| [p[0], p[1]]).collect()
}

/// Metrics of an outcome grid. `reachable_area` normalizes the hull area;
/// `predicted` supplies the outcomes for `prediction_rmse`.
pub fn grid_metrics(
    outcomes: &OutcomeGrid,
    grid: &AffordanceGrid,
    reachable_area: f64,
    predicted: Option<&OutcomeGrid>,
) -> GridMetrics {
    let pts = &outcomes.outcomes;
    let area = hull_area(&planar(pts));
    let prediction_rmse = predicted.map(|p| {
        let ss: f64 = pts
            .iter()
            .zip(&p.outcomes)
            .map(|(a, b)| TargetProjection::distance(a, b).powi(2))
            .sum();
        (ss / pts.len() as f64).sqrt()
    });
    GridMetrics {
        min_pairwise: min_pairwise(pts).0,
        mean_neighbor: mean_neighbor_distance(pts, grid),
        hull_area: area,
        coverage_fraction: if reachable_area > 0.0 {
            area / reachable_area
        } else {
            0.0
        },
        prediction_rmse,
    }
}

/// Area of the convex hull of `samples` outcomes from `env` under its
/// coverage action distribution.
///
/// Every grid outcome is itself reachable, so its hull lies inside this one
/// up to sampling error and the coverage fraction stays at or below one.
pub fn reachable_area<E: Environment>(env: &E, samples: usize, rng: &mut RunRng) -> f64 {
    let mut pts = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut e = env.clone();
        for _ in 0..env.horizon() {
            let a = e.coverage_action(rng);
            e.step(&a, rng).expect("coverage actions are admissible");
        }
        let o = e.outcome();
        pts.push([o[0], o[1]]);
    }
    hull_area(&pts)
}

/// Rolls every vertex through `env` `trials` times (outcomes averaged) and
/// computes metrics, comparing against `predictor` rollouts when given.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_grid<E: Environment>(
    proposer: &Proposer,
    predictor: Option<&Predictor>,
    env: &E,
    grid: &AffordanceGrid,
    trials: usize,
    reachable_area: f64,
    rng: &mut RunRng,
) -> Result<(OutcomeGrid, GridMetrics), ProposerError> {
    let out = averaged_rollout(proposer, env, grid, trials, None, rng)?;
    let pred = match predictor {
        Some(p) => {
            let r = rollout_predictor(proposer, p, env, grid)?;
            Some(r.outcomes().clone())
        }
        None => None,
    };
    let m = grid_metrics(&out, grid, reachable_area, pred.as_ref());
    Ok((out, m))
}

pub(crate) fn averaged_rollout<E: Environment>(
    proposer: &Proposer,
    env: &E,
    grid: &AffordanceGrid,
    trials: usize,
    blank: Option<std::ops::Range<usize>>,
    rng: &mut RunRng,
) -> Result<OutcomeGrid, ProposerError> {
    let trials = trials.max(1);
    let mut acc: Option<Vec<Vec<f64>>> = None;
    for _ in 0..trials {
        let o = rollout_env_blanked(proposer, env, grid, blank.clone(), rng)?;
        acc = Some(match acc {
            None => o.outcomes,
            Some(mut a) => {
                a.iter_mut()
                    .zip(&o.outcomes)
                    .for_each(|(x, y)| x.iter_mut().zip(y).for_each(|(p, q)| *p += q));
                a
            }
        });
    }
    let outcomes = acc
        .expect("trials ≥ 1")
        .into_iter()
        .map(|v| v.into_iter().map(|x| x / trials as f64).collect())
        .collect();
    Ok(OutcomeGrid {
        outcomes,
        sigma: None,
        source: OutcomeSource::Environment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Reacher2D, REACH};
    use crate::seed;

    #[test]
    fn unit_square_metrics() {
        let g = AffordanceGrid::new(2, 2);
        let o = OutcomeGrid {
            outcomes: vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
            ],
            sigma: None,
            source: OutcomeSource::Environment,
        };
        let m = grid_metrics(&o, &g, 2.0, Some(&o));
        assert_eq!(
            (
                m.hull_area,
                m.min_pairwise,
                m.mean_neighbor,
                m.coverage_fraction
            ),
            (1.0, 1.0, 1.0, 0.5)
        );
        assert_eq!(m.prediction_rmse, Some(0.0));
    }

    #[test]
    fn reacher_reachable_area_is_inside_the_reach_disc() {
        let mut rng = seed::rng(30, &[]);
        let a = reachable_area(&Reacher2D::empty(), 20_000, &mut rng);
        let disc = std::f64::consts::PI * REACH * REACH;
        assert!(a > 0.5 * disc && a <= disc, "{a} vs disc {disc}");
    }

    // The support point in direction φ has cumulative headings
    // clamp(φ, ±i·π/2), so the exact hull is the hull of that curve.
    fn support_curve_hull_area() -> f64 {
        use crate::env::{JOINTS, JOINT_LIMIT, SEGMENT_LENGTH};
        let n = 200_000;
        let pts: Vec<[f64; 2]> = (0..=n)
            .map(|k| {
                let phi = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                (1..=JOINTS).fold([0.0, 0.0], |p, i| {
                    let h = phi.clamp(-(i as f64) * JOINT_LIMIT, i as f64 * JOINT_LIMIT);
                    [
                        p[0] + SEGMENT_LENGTH * h.cos(),
                        p[1] + SEGMENT_LENGTH * h.sin(),
                    ]
                })
            })
            .collect();
        hull_area(&pts)
    }

    #[test]
    fn reachable_area_matches_support_curve() {
        let exact = support_curve_hull_area();
        assert!((exact - 47.875).abs() < 1e-3, "{exact}");
        let mut rng = seed::rng(31, &[]);
        let estimate = reachable_area(&Reacher2D::empty(), 100_000, &mut rng);
        assert!(
            (estimate - exact).abs() / exact < 0.02,
            "{estimate} vs {exact}"
        );
    }
}

use serde::{Deserialize, Serialize};

use crate::env::TargetProjection;
use crate::proposer::{AffordanceGrid, OutcomeGrid};

/// Newton iterations per cell.
pub const NEWTON_ITERATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationResult {
    pub omega: Vec<f64>,
    /// `(cx, cy)` of the chosen cell, or the lattice index when a vertex is returned.
    pub cell: (usize, usize),
    pub residual: f64,
    pub fallback: bool,
}

/// Bilinear patch over one cell with corners `p00, p10, p11, p01`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearCell {
    pub p00: [f64; 2],
    pub p10: [f64; 2],
    pub p11: [f64; 2],
    pub p01: [f64; 2],
}

impl BilinearCell {
    pub fn eval(&self, u: f64, v: f64) -> [f64; 2] {
        let w = [(1.0 - u) * (1.0 - v), u * (1.0 - v), u * v, (1.0 - u) * v];
        let c = [self.p00, self.p10, self.p11, self.p01];
        [0, 1].map(|d| (0..4).map(|k| w[k] * c[k][d]).sum())
    }

    /// Columns `∂B/∂u`, `∂B/∂v`.
    pub fn jacobian(&self, u: f64, v: f64) -> [[f64; 2]; 2] {
        let du = [0, 1]
            .map(|d| (1.0 - v) * (self.p10[d] - self.p00[d]) + v * (self.p11[d] - self.p01[d]));
        let dv = [0, 1]
            .map(|d| (1.0 - u) * (self.p01[d] - self.p00[d]) + u * (self.p11[d] - self.p10[d]));
        [du, dv]
    }

    pub fn center_determinant(&self) -> f64 {
        let [du, dv] = self.jacobian(0.5, 0.5);
        du[0] * dv[1] - du[1] * dv[0]
    }

    /// Newton's method on `B(u, v) = target` from the cell centre, clamped
    /// to the unit square after every step. Returns `(u, v, residual)`.
    pub fn invert(&self, target: [f64; 2]) -> (f64, f64, f64) {
        let (mut u, mut v) = (0.5, 0.5);
        for _ in 0..NEWTON_ITERATIONS {
            let b = self.eval(u, v);
            let r = [b[0] - target[0], b[1] - target[1]];
            let [du, dv] = self.jacobian(u, v);
            let det = du[0] * dv[1] - du[1] * dv[0];
            if det.abs() < 1e-300 {
                break;
            }
            let su = (dv[1] * r[0] - dv[0] * r[1]) / det;
            let sv = (du[0] * r[1] - du[1] * r[0]) / det;
            let (nu, nv) = ((u - su).clamp(0.0, 1.0), (v - sv).clamp(0.0, 1.0));
            if nu == u && nv == v {
                break;
            }
            (u, v) = (nu, nv);
        }
        let b = self.eval(u, v);
        (u, v, TargetProjection::distance(&b, &target))
    }
}

fn cell_of(outcomes: &OutcomeGrid, grid: &AffordanceGrid, cx: usize, cy: usize) -> BilinearCell {
    let [a, b, c, d] = grid.cell_corners(cx, cy);
    let p = |i: usize| [outcomes.outcomes[i][0], outcomes.outcomes[i][1]];
    BilinearCell {
        p00: p(a),
        p10: p(b),
        p11: p(c),
        p01: p(d),
    }
}

/// Cells whose orientation at the centre disagrees with the grid's dominant
/// orientation, or is degenerate. These are folded and skipped.
pub fn folded_cells(outcomes: &OutcomeGrid, grid: &AffordanceGrid) -> Vec<(usize, usize)> {
    let m = grid.side() - 1;
    let dets: Vec<((usize, usize), f64)> = (0..m)
        .flat_map(|cy| (0..m).map(move |cx| (cx, cy)))
        .map(|c| (c, cell_of(outcomes, grid, c.0, c.1).center_determinant()))
        .collect();
    let positive = dets.iter().filter(|(_, d)| *d > 0.0).count();
    let negative = dets.iter().filter(|(_, d)| *d < 0.0).count();
    let sign = if positive >= negative { 1.0 } else { -1.0 };
    dets.into_iter()
        .filter(|(_, d)| !(d * sign > 0.0))
        .map(|(c, _)| c)
        .collect()
}

/// Affordance whose bilinear reconstruction is closest to `target`, searched
/// over all unfolded cells and the grid vertices. When nothing gets within
/// `r_max` the nearest vertex is returned with `fallback` set.
pub fn interpolate_affordance(
    target: [f64; 2],
    outcomes: &OutcomeGrid,
    grid: &AffordanceGrid,
    r_max: f64,
) -> InterpolationResult {
    assert_eq!(grid.dim(), 2, "bilinear interpolation needs a 2-D grid");
    let m = grid.side() - 1;
    let folded = folded_cells(outcomes, grid);
    let mut best: Option<(f64, (usize, usize), f64, f64)> = None;
    for cy in 0..m {
        for cx in 0..m {
            if folded.contains(&(cx, cy)) {
                continue;
            }
            let (u, v, r) = cell_of(outcomes, grid, cx, cy).invert(target);
            if best.is_none_or(|b| r < b.0) {
                best = Some((r, (cx, cy), u, v));
            }
        }
    }
    let (vi, vd) = outcomes
        .outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| (i, TargetProjection::distance(o, &target)))
        .fold(
            (0, f64::INFINITY),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        );
    match best {
        // Vertices are corners of the reconstruction; prefer one on ties.
        Some((r, (cx, cy), u, v)) if r < r_max && r < vd => {
            let h = grid.spacing();
            let omega = vec![
                (-1.0 + h * (cx as f64 + u)).clamp(-1.0, 1.0),
                (-1.0 + h * (cy as f64 + v)).clamp(-1.0, 1.0),
            ];
            InterpolationResult {
                omega,
                cell: (cx, cy),
                residual: r,
                fallback: false,
            }
        }
        _ => {
            let idx = grid.lattice_index(vi);
            InterpolationResult {
                omega: grid.vertex(vi).to_vec(),
                cell: (idx[0], idx[1]),
                residual: vd,
                fallback: vd >= r_max,
            }
        }
    }
}

/// Re-evaluates the bilinear reconstruction at `omega`.
pub fn reconstruct(omega: &[f64], outcomes: &OutcomeGrid, grid: &AffordanceGrid) -> [f64; 2] {
    let m = grid.side() - 1;
    let h = grid.spacing();
    let t = |w: f64| ((w + 1.0) / h).clamp(0.0, m as f64);
    let (x, y) = (t(omega[0]), t(omega[1]));
    let (cx, cy) = (
        (x.floor() as usize).min(m - 1),
        (y.floor() as usize).min(m - 1),
    );
    cell_of(outcomes, grid, cx, cy).eval(x - cx as f64, y - cy as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proposer::OutcomeSource;
    use proptest::prelude::*;

    fn warped(grid: &AffordanceGrid) -> OutcomeGrid {
        let outcomes = grid
            .vertices()
            .iter()
            .map(|w| {
                vec![
                    2.0 * w[0] + 0.3 * w[1] * w[1],
                    1.5 * w[1] + 0.2 * w[0] * w[1],
                ]
            })
            .collect();
        OutcomeGrid {
            outcomes,
            sigma: None,
            source: OutcomeSource::Environment,
        }
    }

    #[test]
    fn vertex_target_recovers_vertex_affordance() {
        let g = AffordanceGrid::new(2, 9);
        let o = warped(&g);
        for i in [0, 10, 40, 57, 80] {
            let t = [o.outcomes[i][0], o.outcomes[i][1]];
            let r = interpolate_affordance(t, &o, &g, 0.4);
            assert!(!r.fallback && r.residual < 1e-12);
            assert!(
                (r.omega[0] - g.vertex(i)[0]).abs() < 1e-9
                    && (r.omega[1] - g.vertex(i)[1]).abs() < 1e-9
            );
        }
    }

    #[test]
    fn affine_patch_center_is_exact() {
        let g = AffordanceGrid::new(2, 9);
        let outcomes = g
            .vertices()
            .iter()
            .map(|w| vec![3.0 * w[0] - w[1] + 0.5, w[0] + 2.0 * w[1]])
            .collect();
        let o = OutcomeGrid {
            outcomes,
            sigma: None,
            source: OutcomeSource::Environment,
        };
        let center = [-0.375, 0.125];
        let t = [
            3.0 * center[0] - center[1] + 0.5,
            center[0] + 2.0 * center[1],
        ];
        let r = interpolate_affordance(t, &o, &g, 0.4);
        assert!(r.residual < 1e-12);
        assert!((r.omega[0] - center[0]).abs() < 1e-12 && (r.omega[1] - center[1]).abs() < 1e-12);
    }

    #[test]
    fn far_target_falls_back_to_nearest_vertex() {
        let g = AffordanceGrid::new(2, 9);
        let o = warped(&g);
        let r = interpolate_affordance([100.0, 100.0], &o, &g, 0.4);
        assert!(r.fallback);
        assert_eq!(r.omega, vec![1.0, 1.0]);
        let d = TargetProjection::distance(&o.outcomes[80], &[100.0, 100.0]);
        assert_eq!(r.residual, d);
    }

    #[test]
    fn folded_cell_is_detected() {
        let g = AffordanceGrid::new(2, 3);
        let mut o = warped(&g);
        // swap two corners of cell (1, 1) to twist it
        o.outcomes.swap(g.index2(2, 1), g.index2(2, 2));
        assert!(folded_cells(&o, &g).contains(&(1, 1)));
        assert!(folded_cells(&warped(&g), &g).is_empty());
    }

    proptest! {
        #[test]
        fn inverse_bilinear_round_trips(u in 0.0..=1.0f64, v in 0.0..=1.0f64, jit in proptest::collection::vec(-0.2..0.2f64, 8)) {
            let c = BilinearCell {
                p00: [0.0 + jit[0], 0.0 + jit[1]],
                p10: [1.0 + jit[2], 0.0 + jit[3]],
                p11: [1.0 + jit[4], 1.0 + jit[5]],
                p01: [0.0 + jit[6], 1.0 + jit[7]],
            };
            let (ru, rv, res) = c.invert(c.eval(u, v));
            prop_assert!(res < 1e-9);
            prop_assert!((ru - u).abs() < 1e-6 && (rv - v).abs() < 1e-6);
        }

        #[test]
        fn claimed_residual_matches_reconstruction(x in -2.0..2.0f64, y in -1.5..1.5f64) {
            let g = AffordanceGrid::new(2, 9);
            let o = warped(&g);
            let r = interpolate_affordance([x, y], &o, &g, 0.4);
            let b = reconstruct(&r.omega, &o, &g);
            if !r.fallback {
                prop_assert!((TargetProjection::distance(&b, &[x, y]) - r.residual).abs() < 1e-6);
            }
        }
    }
}

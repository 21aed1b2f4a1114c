//! Evaluating outcome grids in the real environment and using them: metrics,
//! inverse bilinear interpolation from a target point to an affordance,
//! reaching, obstacle-transplant comparisons and plot/CSV export.

mod export;
mod geometry;
mod interpolate;
mod metrics;
mod reach;

pub use export::{metrics_csv_row, outcome_svg, write_outcomes_csv, METRICS_HEADER};
pub use geometry::{convex_hull, hull_area, inside_convex, polygon_area};
pub use interpolate::{
    folded_cells, interpolate_affordance, reconstruct, BilinearCell, InterpolationResult,
    NEWTON_ITERATIONS,
};
pub use metrics::{evaluate_grid, grid_metrics, reachable_area, GridMetrics, COVERAGE_SLACK};
pub use reach::{reach, transplant_compare, ReachResult, TransplantComparison};

use std::fmt::Write as _;
use std::io::{self, Write};

use super::metrics::GridMetrics;
use crate::proposer::{AffordanceGrid, OutcomeGrid, OutcomeSource};

/// One row per vertex: ω coordinates, outcome coordinates, σ, source.
pub fn write_outcomes_csv<W: Write>(
    mut w: W,
    grid: &AffordanceGrid,
    outcomes: &OutcomeGrid,
) -> io::Result<()> {
    let n = grid.dim();
    let d = outcomes.outcomes.first().map_or(0, |o| o.len());
    let mut header: Vec<String> = (0..n).map(|i| format!("omega_{i}")).collect();
    header.extend((0..d).map(|i| format!("outcome_{i}")));
    header.extend(["sigma".to_string(), "source".to_string()]);
    writeln!(w, "{}", header.join(","))?;
    let source = match outcomes.source {
        OutcomeSource::Environment => "environment",
        OutcomeSource::Predictor => "predictor",
    };
    for (i, o) in outcomes.outcomes.iter().enumerate() {
        let mut row: Vec<String> = grid.vertex(i).iter().map(|v| v.to_string()).collect();
        row.extend(o.iter().map(|v| v.to_string()));
        row.push(
            outcomes
                .sigma
                .as_ref()
                .map_or(String::new(), |s| s[i].to_string()),
        );
        row.push(source.to_string());
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub const METRICS_HEADER: &str =
    "cycle,min_pairwise,mean_neighbor,hull_area,coverage_fraction,prediction_rmse";

pub fn metrics_csv_row(cycle: usize, m: &GridMetrics) -> String {
    format!(
        "{cycle},{},{},{},{},{}",
        m.min_pairwise,
        m.mean_neighbor,
        m.hull_area,
        m.coverage_fraction,
        m.prediction_rmse.map_or(String::new(), |v| v.to_string())
    )
}

/// Scatter plot of the outcome grid: neighbour edges as lines, one circle per
/// vertex coloured by its ω coordinates (red ~ ω₀, green ~ ω₁).
pub fn outcome_svg(grid: &AffordanceGrid, outcomes: &OutcomeGrid, extent: f64) -> String {
    let size = 600.0;
    let px = |v: f64| (v + extent) / (2.0 * extent) * size;
    let py = |v: f64| size - (v + extent) / (2.0 * extent) * size;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    let _ = writeln!(s, r##"<g stroke="#bbbbbb" stroke-width="1">"##);
    for &(i, j) in grid.edges() {
        let (a, b) = (&outcomes.outcomes[i], &outcomes.outcomes[j]);
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
            px(a[0]),
            py(a[1]),
            px(b[0]),
            py(b[1])
        );
    }
    let _ = writeln!(s, "</g>");
    for (i, o) in outcomes.outcomes.iter().enumerate() {
        let w = grid.vertex(i);
        let c = |v: f64| ((v + 1.0) * 127.5).round() as u8;
        let g = if w.len() > 1 { c(w[1]) } else { 0 };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="4" fill="rgb({},{},128)"/>"#,
            px(o[0]),
            py(o[1]),
            c(w[0]),
            g
        );
    }
    s.push_str("</svg>\n");
    s
}

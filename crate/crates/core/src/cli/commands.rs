use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::config::{EnvKind, RunConfig};
use super::CliError;
use crate::affordance::{
    evaluate_grid, metrics_csv_row, outcome_svg, reach, reachable_area, write_outcomes_csv,
    GridMetrics, METRICS_HEADER,
};
use crate::diffnet::FusionNet;
use crate::env::{EnvSampler, Environment, LocoSampler, ReacherSampler, REACH};
use crate::persistence::{
    load_network, read_dataset_header, read_weight_header, save_dataset, save_network,
};
use crate::predictor::Predictor;
use crate::proposer::{AffordanceGrid, OutcomeGrid, OutcomeSource, Proposer};
use crate::seed::{self, stream};
use crate::trainer::{run_cycles, TrainerError};

/// Files written by `train`.
pub const RUN_FILES: [&str; 8] = [
    "config.toml",
    "predictor.weights",
    "proposer.weights",
    "dataset.bin",
    "report.json",
    "metrics.csv",
    "outcomes.csv",
    "grid.svg",
];

macro_rules! with_sampler {
    ($cfg:expr, |$s:ident| $body:expr) => {
        match $cfg.env.kind {
            EnvKind::Reacher => {
                let $s = ReacherSampler {
                    obstacles: $cfg.env.obstacles.clone(),
                };
                $body
            }
            EnvKind::Loco => {
                let $s = LocoSampler {
                    params: $cfg.env.loco.clone(),
                };
                $body
            }
        }
    };
}

fn runtime<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(runtime(&path.display().to_string()))
}

fn meta(cfg: &RunConfig, role: &str) -> BTreeMap<String, String> {
    let mut m = BTreeMap::from([
        ("role".to_string(), role.to_string()),
        (
            "env".to_string(),
            format!("{:?}", cfg.env.kind).to_lowercase(),
        ),
        (
            "crate_version".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        ),
    ]);
    if role == "predictor" {
        m.insert(
            "mode".into(),
            format!("{:?}", cfg.predictor.mode).to_lowercase(),
        );
        m.insert("residual".into(), cfg.predictor.residual.to_string());
    } else {
        m.insert("grid_dim".into(), cfg.trainer.grid_dim.to_string());
    }
    m
}

fn plot_extent(kind: EnvKind, outcomes: &OutcomeGrid) -> f64 {
    match kind {
        EnvKind::Reacher => REACH * 1.05,
        EnvKind::Loco => {
            let m = outcomes
                .outcomes
                .iter()
                .flatten()
                .fold(0.0f64, |a, v| a.max(v.abs()));
            (m * 1.1).max(1.0)
        }
    }
}

fn write_grid_artifacts(
    dir: &Path,
    kind: EnvKind,
    grid: &AffordanceGrid,
    outcomes: &OutcomeGrid,
) -> Result<(), CliError> {
    let mut csv = Vec::new();
    write_outcomes_csv(&mut csv, grid, outcomes).map_err(runtime("outcomes.csv"))?;
    write_file(&dir.join("outcomes.csv"), csv)?;
    write_file(
        &dir.join("grid.svg"),
        outcome_svg(grid, outcomes, plot_extent(kind, outcomes)),
    )
}

pub fn train(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(runtime(&dir.display().to_string()))?;
    write_file(&dir.join("config.toml"), cfg.to_toml())?;
    with_sampler!(cfg, |s| train_with(&s, cfg, dir))
}

fn train_with<S: EnvSampler>(sampler: &S, cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let out =
        run_cycles(sampler, &cfg.cycle_config(), &mut |line| println!("{line}")).map_err(|e| {
            match e {
                TrainerError::Config(m) => CliError::Config(m),
                other => CliError::Runtime(other.to_string()),
            }
        })?;
    let save = |name: &str, net: &FusionNet<f32>, role: &str| {
        save_network(&dir.join(name), net, cfg.seed, &meta(cfg, role)).map_err(runtime(name))
    };
    save("predictor.weights", &out.predictor.net, "predictor")?;
    save("proposer.weights", &out.proposer.net, "proposer")?;
    save_dataset(&dir.join("dataset.bin"), &out.dataset).map_err(runtime("dataset.bin"))?;
    write_file(
        &dir.join("report.json"),
        serde_json::to_string_pretty(&out.report).map_err(runtime("report.json"))?,
    )?;
    let mut metrics = format!("{METRICS_HEADER}\n");
    for c in &out.report.cycles {
        metrics.push_str(&metrics_csv_row(c.cycle, &c.metrics));
        metrics.push('\n');
    }
    write_file(&dir.join("metrics.csv"), metrics)?;
    write_grid_artifacts(dir, cfg.env.kind, &out.grid, &out.outcomes)?;
    println!("status=ok run_dir={}", dir.display());
    Ok(())
}

struct Run {
    cfg: RunConfig,
    dir: PathBuf,
}

impl Run {
    fn open(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join("config.toml");
        let text =
            fs::read_to_string(&path).map_err(runtime(&format!("no run at {}", dir.display())))?;
        let cfg = super::parse_config(&text, &[]).map_err(runtime(&path.display().to_string()))?;
        Ok(Self {
            cfg,
            dir: dir.to_path_buf(),
        })
    }

    fn models<E: Environment>(&self, env: &E) -> Result<(Predictor, Proposer), CliError> {
        let load = |name: &str| {
            load_network(&self.dir.join(name))
                .map(|(n, _)| n)
                .map_err(runtime(name))
        };
        let p = &self.cfg.predictor;
        let predictor = Predictor::from_net(env, load("predictor.weights")?, p.mode, p.residual)
            .map_err(runtime("predictor.weights"))?;
        let proposer = Proposer::from_net(env, load("proposer.weights")?)
            .map_err(runtime("proposer.weights"))?;
        Ok((predictor, proposer))
    }

    fn grid(&self) -> AffordanceGrid {
        AffordanceGrid::new(self.cfg.trainer.grid_dim, self.cfg.proposer.grid_side)
    }
}

pub fn eval(dir: &Path) -> Result<(), CliError> {
    let run = Run::open(dir)?;
    let m = with_sampler!(run.cfg, |s| eval_with(&s, &run))?;
    let mut lines = vec![
        format!("min_pairwise={}", m.min_pairwise),
        format!("mean_neighbor={}", m.mean_neighbor),
        format!("hull_area={}", m.hull_area),
        format!("coverage_fraction={}", m.coverage_fraction),
    ];
    if let Some(r) = m.prediction_rmse {
        lines.push(format!("prediction_rmse={r}"));
    }
    println!("{}", lines.join("\n"));
    Ok(())
}

fn eval_with<S: EnvSampler>(sampler: &S, run: &Run) -> Result<GridMetrics, CliError> {
    let env = sampler.reference();
    let (predictor, proposer) = run.models(&env)?;
    let cfg = &run.cfg;
    let grid = run.grid();
    let area = reachable_area(
        &env,
        cfg.eval.reachable_samples,
        &mut seed::rng(cfg.seed, &[stream::EVAL, u64::MAX]),
    );
    let (outcomes, m) = evaluate_grid(
        &proposer,
        Some(&predictor),
        &env,
        &grid,
        cfg.eval.trials,
        area,
        &mut seed::rng(cfg.seed, &[stream::EVAL, u64::MAX - 2]),
    )
    .map_err(runtime("evaluate"))?;
    write_file(
        &run.dir.join("eval.csv"),
        format!(
            "{METRICS_HEADER}\n{}\n",
            metrics_csv_row(cfg.trainer.cycles, &m)
        ),
    )?;
    write_grid_artifacts(&run.dir, cfg.env.kind, &grid, &outcomes)?;
    Ok(m)
}

/// Reads an outcome grid written by [`write_outcomes_csv`].
pub fn read_outcomes_csv(path: &Path, grid: &AffordanceGrid) -> Result<OutcomeGrid, CliError> {
    let text = fs::read_to_string(path).map_err(runtime(&path.display().to_string()))?;
    let bad = |m: String| CliError::Runtime(format!("{}: {m}", path.display()));
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .split(',')
        .collect();
    let n = grid.dim();
    let d = header.iter().filter(|h| h.starts_with("outcome_")).count();
    let (mut outcomes, mut sigma, mut source) =
        (Vec::new(), Vec::new(), OutcomeSource::Environment);
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n + d + 2 {
            return Err(bad(format!(
                "row {i} has {} fields, expected {}",
                cells.len(),
                n + d + 2
            )));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("row {i}: {e}")));
        outcomes.push(
            cells[n..n + d]
                .iter()
                .map(|s| num(s))
                .collect::<Result<Vec<f64>, _>>()?,
        );
        if !cells[n + d].is_empty() {
            sigma.push(num(cells[n + d])?);
        }
        source = if cells[n + d + 1] == "predictor" {
            OutcomeSource::Predictor
        } else {
            OutcomeSource::Environment
        };
    }
    if outcomes.len() != grid.len() {
        return Err(bad(format!(
            "{} rows for a {}-vertex grid",
            outcomes.len(),
            grid.len()
        )));
    }
    let sigma = if sigma.len() == outcomes.len() {
        Some(sigma)
    } else {
        None
    };
    Ok(OutcomeGrid {
        outcomes,
        sigma,
        source,
    })
}

pub fn read_targets(path: &Path) -> Result<Vec<[f64; 2]>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read targets {}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let v: Vec<f64> = l
                .split([',', ' ', '\t'])
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| {
                    CliError::Config(format!("{}: bad target `{l}`: {e}", path.display()))
                })?;
            match v[..] {
                [x, y] => Ok([x, y]),
                _ => Err(CliError::Config(format!(
                    "{}: target `{l}` needs two numbers",
                    path.display()
                ))),
            }
        })
        .collect()
}

pub fn reach_targets(dir: &Path, targets: &[[f64; 2]]) -> Result<(), CliError> {
    if let Some(t) = targets
        .iter()
        .find(|t| !t[0].is_finite() || !t[1].is_finite())
    {
        return Err(CliError::Config(format!("non-finite target {t:?}")));
    }
    let run = Run::open(dir)?;
    with_sampler!(run.cfg, |s| reach_with(&s, &run, targets))
}

fn reach_with<S: EnvSampler>(sampler: &S, run: &Run, targets: &[[f64; 2]]) -> Result<(), CliError> {
    let env = sampler.reference();
    let (_, proposer) = run.models(&env)?;
    let grid = run.grid();
    if grid.dim() != 2 {
        return Err(CliError::Runtime(
            "reach needs a two-dimensional grid".into(),
        ));
    }
    let outcomes = read_outcomes_csv(&run.dir.join("outcomes.csv"), &grid)?;
    let path = run.dir.join("reach.csv");
    let fresh = !path.exists();
    let mut csv = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(runtime("reach.csv"))?;
    if fresh {
        writeln!(
            csv,
            "target_x,target_y,omega_0,omega_1,achieved_x,achieved_y,error,fallback"
        )
        .map_err(runtime("reach.csv"))?;
    }
    let mut errors = Vec::with_capacity(targets.len());
    let mut fallbacks = 0;
    for (i, &t) in targets.iter().enumerate() {
        let mut rng = seed::rng(run.cfg.seed, &[stream::REACH, i as u64]);
        let r = reach(
            t,
            &proposer,
            &env,
            &outcomes,
            &grid,
            run.cfg.eval.r_max,
            &mut rng,
        )
        .map_err(runtime("reach"))?;
        let w = &r.interpolation.omega;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            t[0], t[1], w[0], w[1], r.achieved[0], r.achieved[1], r.error, r.interpolation.fallback
        )
        .map_err(runtime("reach.csv"))?;
        if targets.len() == 1 {
            println!("omega={},{}", w[0], w[1]);
            println!("achieved={},{}", r.achieved[0], r.achieved[1]);
            println!("error={}", r.error);
            println!("fallback={}", r.interpolation.fallback);
        }
        fallbacks += usize::from(r.interpolation.fallback);
        errors.push(r.error);
    }
    if targets.len() > 1 {
        errors.sort_by(f64::total_cmp);
        let n = errors.len();
        let median = if n % 2 == 1 {
            errors[n / 2]
        } else {
            0.5 * (errors[n / 2 - 1] + errors[n / 2])
        };
        println!("targets={n}");
        println!("median_error={median}");
        println!("fallback_count={fallbacks}");
    }
    Ok(())
}

pub fn plot(dir: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let run = Run::open(dir)?;
    let grid = run.grid();
    let outcomes = read_outcomes_csv(&dir.join("outcomes.csv"), &grid)?;
    let path = out.map_or_else(|| dir.join("grid.svg"), Path::to_path_buf);
    write_file(
        &path,
        outcome_svg(&grid, &outcomes, plot_extent(run.cfg.env.kind, &outcomes)),
    )?;
    println!("svg={}", path.display());
    Ok(())
}

pub fn inspect(file: &Path) -> Result<(), CliError> {
    if let Ok(h) = read_weight_header(file) {
        println!("file_kind=weights");
        println!("format_version={}", h.format_version);
        println!("param_count={}", h.param_count);
        println!("seed={}", h.seed);
        println!("crc32={:08x}", h.crc32);
        println!("sensor_dim={}", h.sensor_dim);
        println!("side_dim={}", h.side_dim);
        let kinds = |l: &[crate::persistence::LayerDescriptor]| {
            l.iter()
                .map(|d| match (d.in_dim, d.out_dim) {
                    (Some(a), Some(b)) => format!("dense:{a}x{b}"),
                    _ => format!("{:?}", d.kind).to_lowercase(),
                })
                .collect::<Vec<_>>()
                .join(",")
        };
        println!("trunk={}", kinds(&h.trunk));
        println!("head={}", kinds(&h.head));
        for (k, v) in &h.meta {
            println!("meta.{k}={v}");
        }
        return Ok(());
    }
    let h = read_dataset_header(file).map_err(runtime(&format!(
        "{} is neither a weight nor a dataset file",
        file.display()
    )))?;
    println!("file_kind=dataset");
    println!("format_version={}", h.format_version);
    println!("sensor_dim={}", h.sensor_dim);
    println!("action_dim={}", h.action_dim);
    println!("record_bytes={}", h.record_bytes);
    println!("count={}", h.count);
    println!("provenance={}", h.provenance.join(","));
    Ok(())
}

//! Command-line driver. Every command works on a run directory holding the
//! effective config, weights, dataset and reports of one training run.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{read_outcomes_csv, RUN_FILES};
pub use config::{apply_override, load_config, parse_config, EnvConfig, EnvKind, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "affordance",
    version,
    about = "Learn and use body-affordance grids"
)]
pub struct Cli {
    /// Worker threads for data collection.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the collect/train cycles and write a run directory.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        run_dir: PathBuf,
        /// `section.key=value`, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Re-evaluate the trained grid; writes eval.csv, outcomes.csv and grid.svg.
    Eval {
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Interpolate an affordance for target points and execute it.
    Reach {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true)]
        target: Option<Vec<f64>>,
        /// File with one `x y` or `x,y` target per line.
        #[arg(long, conflicts_with = "target")]
        targets: Option<PathBuf>,
    },
    /// Redraw grid.svg from outcomes.csv.
    Plot {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the header of a weight or dataset file.
    Inspect { file: PathBuf },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train {
            config,
            run_dir,
            sets,
        } => {
            let mut cfg = load_config(&config, &sets)?;
            if let Some(w) = cli.workers {
                cfg.trainer.workers = w;
            }
            commands::train(&cfg, &run_dir)
        }
        Command::Eval { run_dir } => commands::eval(&run_dir),
        Command::Reach {
            run_dir,
            target,
            targets,
        } => {
            let list = match (target, targets) {
                (Some(t), None) => vec![[t[0], t[1]]],
                (None, Some(path)) => commands::read_targets(&path)?,
                _ => {
                    return Err(CliError::Config(
                        "reach needs --target X Y or --targets FILE".into(),
                    ))
                }
            };
            commands::reach_targets(&run_dir, &list)
        }
        Command::Plot { run_dir, out } => commands::plot(&run_dir, out.as_deref()),
        Command::Inspect { file } => commands::inspect(&file),
    }
}

//! Library side of the `qcond` command: scenario parsing, dispatch and
//! report emission.
//!
//! Exit codes are `0` on success, `1` for I/O failures, `2` for schema,
//! validation and usage errors, and `3` for domain errors raised while
//! running a valid scenario.

pub mod emit;
pub mod report;
pub mod scenario;

use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use emit::{emit, Format};
pub use report::{run_scenario, Body, Report};
pub use scenario::{parse_model_scenario, parse_scenario, Kind, Overrides, Scenario, Task};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error at `{path}`: {reason}")]
    Schema { path: String, reason: String },
    #[error("invalid value at `{path}`: {source}")]
    Validation { path: String, source: qcond_core::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Domain { context: String, source: qcond_core::Error },
    #[error("cannot read `{path}`: {message}")]
    Input { path: String, message: String },
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Validation { .. } | CliError::Usage(_) => EXIT_INVALID,
            CliError::Domain { .. } => EXIT_DOMAIN,
            CliError::Input { .. } | CliError::Output(_) => EXIT_IO,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qcond", version, about = "Sequential quantum measurement, Bell scans and discrete filtering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Numerical tolerance (overrides the scenario's `tol`).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// RNG seed (overrides the scenario's `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format; filter runs default to jsonl, everything else to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run any scenario, dispatching on its `kind`.
    Run { file: String },
    /// Run a `bell_scan` scenario.
    BellScan { file: String },
    /// Run a `filter` scenario, or a bare model with `--model`.
    Filter {
        file: Option<String>,
        #[arg(long, conflicts_with = "file")]
        model: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        /// Explicit readings, comma separated; overrides sampling.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        record: Option<Vec<f64>>,
    },
    /// Run a `check` scenario.
    Check { file: String },
}

/// Reads `path`, or stdin for `-`.
pub fn read_input(path: &str) -> Result<String, CliError> {
    let input_err = |e: std::io::Error| CliError::Input { path: path.to_string(), message: e.to_string() };
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(input_err)?;
        Ok(s)
    } else {
        std::fs::read_to_string(Path::new(path)).map_err(input_err)
    }
}

fn expect_kind(s: &Scenario, kind: Kind) -> Result<(), CliError> {
    if s.kind != kind {
        return Err(CliError::Usage(format!(
            "this subcommand runs `{}` scenarios, the file has kind `{}`",
            kind.name(),
            s.kind.name()
        )));
    }
    Ok(())
}

/// Parses, runs and renders one invocation.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let overrides = Overrides { tol: cli.tol, seed: cli.seed };
    let scenario = match &cli.command {
        Command::Run { file } => parse_scenario(&read_input(file)?, overrides)?,
        Command::BellScan { file } => {
            let s = parse_scenario(&read_input(file)?, overrides)?;
            expect_kind(&s, Kind::BellScan)?;
            s
        }
        Command::Check { file } => {
            let s = parse_scenario(&read_input(file)?, overrides)?;
            expect_kind(&s, Kind::Check)?;
            s
        }
        Command::Filter { file, model, steps, record } => match (file, model) {
            (_, Some(m)) => parse_model_scenario(&read_input(m)?, *steps, record.clone(), overrides)?,
            (Some(f), None) => {
                let mut s = parse_scenario(&read_input(f)?, overrides)?;
                expect_kind(&s, Kind::Filter)?;
                if let Task::Filter(task) = &mut s.task {
                    if let Some(r) = record {
                        task.steps = r.len();
                        task.record = Some(r.clone());
                    } else if let Some(n) = steps {
                        task.steps = *n;
                        task.record = None;
                    }
                }
                s
            }
            (None, None) => return Err(CliError::Usage("`filter` needs a scenario FILE or `--model`".into())),
        },
    };
    let format = cli.format;
    let report = run_scenario(&scenario, format == Some(Format::Csv))?;
    emit(&report, format.unwrap_or_else(|| Format::default_for(&report.body)))
}

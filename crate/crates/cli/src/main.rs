//! `varnet`: sparse VAR(1) network inference from time-course data.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | invalid command line |
//! | 3 | file could not be read or written |
//! | 4 | malformed input or configuration file |
//! | 5 | unusable data (constant column, missing values, bad dimensions) |
//! | 6 | numerical failure (singular covariance, solver breakdown) |
//! | 7 | invalid penalty setup (missing classes, bad ratio or level) |
//! | 8 | simulation could not be drawn |
//! | 1 | any other error |

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{BenchArgs, Command, EvalArgs, InferArgs, RunConfig, SimulateArgs};
use varnet::Error;

const THREADS_ENV: &str = "VARNET_THREADS";

#[derive(Parser)]
#[command(name = "varnet", version, about = "Sparse VAR(1) network inference with structured Lasso penalties")]
struct Cli {
    /// Worker threads; overridden by VARNET_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Infer a network from a data matrix.
    Infer(InferArgs),
    /// Simulate hub-structured networks and time courses.
    Simulate(SimulateArgs),
    /// Benchmark every penalty regime on simulated data.
    Bench(BenchArgs),
    /// Compare an estimated edge list against a gold standard.
    Eval(EvalArgs),
    /// Replay a run from a saved configuration file.
    Run {
        config: PathBuf,
    },
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    if err.downcast_ref::<toml::de::Error>().is_some() {
        return 4;
    }
    let Some(e) = err.downcast_ref::<Error>() else {
        return 1;
    };
    match e.root() {
        Error::Io(_) => 3,
        Error::Parse { .. } => 4,
        Error::ConstantColumn(_)
        | Error::MissingValueWithImputeOff { .. }
        | Error::AllMissingColumn(_)
        | Error::Dimension(_)
        | Error::NotStandardized => 5,
        Error::SingularCovariance { .. } | Error::SingularActiveBlock { .. } | Error::NonConvergence(_) => 6,
        Error::MissingInit
        | Error::MissingClassification
        | Error::NonPositiveRho(_)
        | Error::InvalidPenalty(_)
        | Error::AllInfinitePenalties
        | Error::EmptyPath
        | Error::DegenerateInput => 7,
        Error::InfeasibleEdgeCount { .. } | Error::SingularSupportBlock(_) | Error::NoStationaryDraw(_) => 8,
        Error::Column { .. } => 1,
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(Some(n)),
                _ => Err(UsageError(format!("{THREADS_ENV} must be a positive integer, got `{v}`")).into()),
            }
        }
        Err(_) => Ok(flag),
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = varnet::io::read_to_string(path)?;
    let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("reading {}", path.display()))?;
    Ok(cfg)
}

fn execute(cfg: &RunConfig) -> Result<()> {
    log::debug!("running {}", cfg.command.name());
    match &cfg.command {
        Command::Infer(a) => commands::infer_cmd(a, cfg),
        Command::Simulate(a) => commands::simulate_cmd(a, cfg),
        Command::Bench(a) => commands::bench_cmd(a, cfg),
        Command::Eval(a) => commands::eval_cmd(a),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match cli.command {
        Cmd::Infer(a) => RunConfig { threads: None, command: Command::Infer(a) },
        Cmd::Simulate(a) => RunConfig { threads: None, command: Command::Simulate(a) },
        Cmd::Bench(a) => RunConfig { threads: None, command: Command::Bench(a) },
        Cmd::Eval(a) => RunConfig { threads: None, command: Command::Eval(a) },
        Cmd::Run { config } => load_config(&config)?,
    };
    if cli.threads == Some(0) {
        return Err(UsageError("--threads must be positive".into()).into());
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(n) = thread_count(cfg.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    execute(&cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

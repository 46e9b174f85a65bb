//! Configuration-driven front end for the `degenspec` library.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod model;

use std::path::{Path, PathBuf};

use degenspec::par::Execution;

pub use commands::{Context, Outcome};
pub use config::Config;
pub use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Solve,
    Count,
    Regime,
    Bo,
    Well,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Solve => "solve",
            Command::Count => "count",
            Command::Regime => "regime",
            Command::Bo => "bo",
            Command::Well => "well",
        }
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub workers: Option<usize>,
    pub warn_only: bool,
}

pub fn load(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    Config::parse(&text)
}

/// Worker count from the command line, else `[run] workers`, else the pool default.
pub fn workers(cfg: &Config, opts: &RunOptions) -> Result<Option<usize>, CliError> {
    let w = match opts.workers {
        Some(w) => Some(w),
        None => cfg.get::<usize>("run", "workers")?,
    };
    if w == Some(0) {
        return Err(CliError::Config("workers must be at least 1".into()));
    }
    Ok(w)
}

/// Runs one command against an already parsed config.
pub fn run_config(cmd: Command, cfg: &Config, opts: &RunOptions) -> Result<Outcome, CliError> {
    let exec = match workers(cfg, opts)? {
        Some(1) => Execution::Sequential,
        _ => Execution::Parallel.effective(),
    };
    let ctx = Context { out: opts.out.clone(), seed: opts.seed, warn_only: opts.warn_only || cfg.flag("run", "warn_only")?, exec };
    match cmd {
        Command::Validate => commands::validate(cfg, &ctx),
        Command::Solve => commands::solve(cfg, &ctx),
        Command::Count => commands::count(cfg, &ctx),
        Command::Regime => commands::regime(cfg, &ctx),
        Command::Bo => commands::bo(cfg, &ctx),
        Command::Well => commands::well(cfg, &ctx),
    }
}

pub fn run(cmd: Command, opts: &RunOptions) -> Result<Outcome, CliError> {
    run_config(cmd, &load(&opts.config)?, opts)
}

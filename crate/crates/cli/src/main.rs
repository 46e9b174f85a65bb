use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use degenspec_cli::{load, run_config, workers, CliError, Command, RunOptions};

#[derive(Parser)]
#[command(name = "degenspec", version, about = "Spectral experiments for degenerate Schrödinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the model hypotheses.
    Validate(Args),
    /// Lowest eigenvalues of the discretized operator.
    Solve(Args),
    /// Eigenvalue counts below a list of thresholds.
    Count(Args),
    /// Asymptotic counting regime of the model family.
    Regime(Args),
    /// Born-Oppenheimer comparison sweep.
    Bo(Args),
    /// Hypersurface well comparison sweep.
    Well(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    workers: Option<usize>,
    /// Report failed checks without failing.
    #[arg(long)]
    warn_only: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            println!("error code=E_USAGE message={first}");
            return ExitCode::from(2);
        }
    };
    let (cmd, args) = match cli.command {
        Cmd::Validate(a) => (Command::Validate, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Count(a) => (Command::Count, a),
        Cmd::Regime(a) => (Command::Regime, a),
        Cmd::Bo(a) => (Command::Bo, a),
        Cmd::Well(a) => (Command::Well, a),
    };
    let opts = RunOptions { config: args.config, out: args.out, seed: args.seed, workers: args.workers, warn_only: args.warn_only };
    match execute(cmd, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            println!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cmd: Command, opts: &RunOptions) -> Result<(), CliError> {
    let cfg = load(&opts.config)?;
    let n = workers(&cfg, opts)?;
    #[cfg(feature = "parallel")]
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size worker pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    let out = run_config(cmd, &cfg, opts)?;
    print!("{}", out.summary);
    for f in &out.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use edgecast_cli::{parse_config, run, CliError, Command, Method, Overrides};

#[derive(Parser)]
#[command(name = "edgecast", version, about = "Caching, computing and multicast bandwidth experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one instance and report the policy, bandwidth and slacks.
    Solve(Args),
    /// Solve every point of the config's [sweep] grid.
    Sweep(Args),
    /// Closed-form gains of a symmetric instance, swept if [sweep] is given.
    Gain(Args),
    /// Exact multicast and unicast optima and the edge-only baseline.
    Oracle(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Monte Carlo samples when exact evaluation is too large.
    #[arg(long)]
    samples: Option<usize>,
    /// Random starts per penalty weight for the multi-start methods.
    #[arg(long)]
    restarts: Option<usize>,
    /// Add a wall-time column to sweep tables. Output is then no longer
    /// reproducible byte for byte.
    #[arg(long)]
    timings: bool,
}

fn execute(command: Command, args: Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.display().to_string(),
        source,
    })?;
    let mut config = parse_config(&text)?;
    Overrides {
        seed: args.seed,
        method: args.method,
        samples: args.samples,
        restarts: args.restarts,
        out: args.out,
    }
    .apply(&mut config)?;
    let output = run(command, &config, args.timings)?;
    match &config.out {
        Some(path) => std::fs::write(path, output).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{output}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Gain(a) => (Command::Gain, a),
        Cmd::Oracle(a) => (Command::Oracle, a),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

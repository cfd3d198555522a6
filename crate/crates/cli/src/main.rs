//! `ptsm`: pseudo-true state-space models and bounded-rationality macro equilibria
//! from the command line.

mod commands;
mod config;
mod error;
mod output;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Conditioning, Context, ModeArg};
use config::RunConfig;
use error::CliError;
use output::{Format, Sink};

#[derive(Parser)]
#[command(name = "ptsm", version, about = "Pseudo-true state-space models and macro equilibria")]
struct Cli {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named calibration: nk-paper, rbc-paper or dmp-paper.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Seed for randomized search starts and property checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Fixed-point and solver tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pseudo-true one-state or d-state model of a process.
    Pseudotrue {
        /// Number of states.
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Use the general grid solver even for exponentially ergodic processes.
        #[arg(long)]
        force_general: bool,
    },
    /// Exponential-ergodicity margins by lag.
    Ergodicity {
        #[arg(long, default_value_t = 40)]
        max_lag: usize,
    },
    /// Persistence decomposition of a process.
    Decompose,
    /// New-Keynesian equilibrium and impulse responses.
    Nk {
        #[arg(long, value_enum, default_value_t = ModeArg::Cree)]
        mode: ModeArg,
    },
    /// Forward-guidance sweep over announcement horizons.
    NkFg {
        #[arg(long, default_value_t = 20)]
        t_max: usize,
        /// Whether the other shocks move with the rate cut.
        #[arg(long, value_enum, default_value_t = Conditioning::Pure)]
        conditioning: Conditioning,
    },
    /// RBC equilibrium and impulse responses.
    Rbc {
        #[arg(long, value_enum, default_value_t = ModeArg::Cree)]
        mode: ModeArg,
    },
    /// Search-and-matching equilibrium and impulse responses.
    Dmp {
        #[arg(long, value_enum, default_value_t = ModeArg::Cree)]
        mode: ModeArg,
    },
    /// General and partial equilibrium economies with transformed loadings.
    GePe,
    /// Golden calibration numbers and fast property checks.
    Selftest {
        /// Print a JSON report instead of a table.
        #[arg(long)]
        json: bool,
    },
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(CliError::config("--tol must be positive"));
    }
    let mut cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &cli.preset {
        config::apply_preset(&mut cfg, name)?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let cfg = resolve_config(cli)?;
    let ctx = Context { cfg, seed: cli.seed, tol: cli.tol };
    if let Command::Selftest { json } = cli.command {
        let report = selftest::run(&ctx)?;
        if json {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        } else {
            print!("{}", selftest::render(&report));
        }
        return Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    let mut sink = Sink::new(&cli.out, cli.format)?;
    let result = match cli.command {
        Command::Pseudotrue { d, force_general } => commands::pseudotrue(&ctx, &mut sink, d, force_general),
        Command::Ergodicity { max_lag } => commands::ergodicity(&ctx, &mut sink, max_lag),
        Command::Decompose => commands::decompose(&ctx, &mut sink),
        Command::Nk { mode } => commands::nk(&ctx, &mut sink, mode),
        Command::NkFg { t_max, conditioning } => commands::nk_fg(&ctx, &mut sink, t_max, conditioning),
        Command::Rbc { mode } => commands::rbc(&ctx, &mut sink, mode),
        Command::Dmp { mode } => commands::dmp(&ctx, &mut sink, mode),
        Command::GePe => commands::ge_pe(&ctx, &mut sink),
        Command::Selftest { .. } => unreachable!("handled above"),
    };
    result.map_err(|e| commands::with_trace(e, Some(&mut sink)))?;
    for path in &sink.written {
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", serde_json::to_string(&err).expect("error serializes"));
            ExitCode::from(err.exit_code as u8)
        }
    }
}

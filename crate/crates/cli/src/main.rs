//! Command-line runner for ground-state experiments.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polylab::config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "polylab", version, about = "Ground states of the semi-discrete random interface problem")]
struct Cli {
    /// TOML or JSON experiment file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for replicate parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// One ground state at the first system size, with its scale decomposition.
    Simulate,
    /// Monte Carlo sweep over every system size.
    Sweep,
    /// Scaling report from the sweep in the output directory.
    Report,
    /// Ding–Wirth and two-scale ledgers.
    Construct,
    /// Lattice-ball and bin counting tables.
    Count,
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn load(cli: &Cli) -> polylab::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<polylab::Error>() {
        Some(polylab::Error::Config(_) | polylab::Error::Domain(_)) => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let result = match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Report => commands::report(&cfg),
        Command::Construct => commands::construct(&cfg),
        Command::Count => commands::count(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! `quorum`: experiment runner for the quorum-sensing model.
//!
//! Exit codes: 0 success, 1 failed `verify` check, 2 configuration error,
//! 3 numerical failure, 4 I/O error.

mod commands;
mod config;
mod figures;
mod output;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{GlobalArgs, Resolved};
use crate::output::Table;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<quorum_core::Error> for CliError {
    fn from(e: quorum_core::Error) -> Self {
        use quorum_core::Error as E;
        match e {
            E::NoConvergence { .. } | E::CapExceeded { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "quorum", version, about = "Channel responses, cooperation statistics and particle simulation for diffusive quorum sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expected molecule counts at a receiver
    Channel(commands::ChannelArgs),
    /// Probability that a bacterium at a fixed position cooperates, η = 1..eta
    CoopProb(commands::CoopArgs),
    /// Statistics of the number of cooperators, η = 1..eta
    Stats,
    /// Particle simulation of whole populations, η = 1..eta
    Simulate(commands::SimulateArgs),
    /// Data behind a numbered figure or table
    Figure(figures::FigureArgs),
    /// Fast self-checks; exit 1 if any fails
    Verify(verify::VerifyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Channel(_) => "channel",
            Command::CoopProb(_) => "coop-prob",
            Command::Stats => "stats",
            Command::Simulate(_) => "simulate",
            Command::Figure(_) => "figure",
            Command::Verify(_) => "verify",
        }
    }
}

/// Run `f` once, or once per sweep value with the value as first column.
fn swept<F>(cfg: &Resolved, f: F) -> Result<Table, CliError>
where
    F: Fn(&Resolved) -> Result<Table, CliError>,
{
    match &cfg.sweep {
        None => f(cfg),
        Some(sw) => {
            let mut all = Table::default();
            for &v in &sw.values {
                let r = cfg.with_param(&sw.param, v)?;
                let mut t = f(&r)?;
                t.prepend(&sw.param, v.into());
                all.extend(t);
            }
            Ok(all)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let cfg = Resolved::new(cli.command.name(), &cli.global)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
    }
    let table = match &cli.command {
        Command::Channel(a) => swept(&cfg, |r| commands::channel(r, a))?,
        Command::CoopProb(a) => swept(&cfg, |r| commands::coop_prob(r, a))?,
        Command::Stats => swept(&cfg, commands::stats)?,
        Command::Simulate(a) => swept(&cfg, |r| commands::simulate(r, a))?,
        Command::Figure(a) => figures::run(&cfg, a)?,
        Command::Verify(a) => {
            return Ok(if verify::run(&cfg, a)? {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    };
    output::emit(&table, &cfg)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("quorum: {e}");
            ExitCode::from(e.code())
        }
    }
}

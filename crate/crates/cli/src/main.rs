//! `stochres` command-line tool.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, Settings};

#[derive(Parser)]
#[command(name = "stochres", version, about = "Threshold observation of a weak signal buried in diffusion noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ergodicity check and tables of the invariant density and cdf
    Law(Settings),
    /// Simulate one path and estimate the signal with both schemes
    Estimate(Settings),
    /// Fisher information against noise level and its optimum
    Resonance(Settings),
    /// MAP error surface over (theta1, eps) and its minima
    Test(Settings),
    /// Monte Carlo check of predicted variances and error rates
    Validate(Settings),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<stochres::Error>() {
            return match e {
                stochres::Error::DegenerateObservation(_) => 3,
                stochres::Error::InvalidArgument(_) | stochres::Error::Expression { .. } | stochres::Error::NotErgodic(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (settings, run): (Settings, fn(&Settings) -> anyhow::Result<()>) = match cli.command {
        Command::Law(s) => (s, commands::law),
        Command::Estimate(s) => (s, commands::estimate),
        Command::Resonance(s) => (s, commands::resonance),
        Command::Test(s) => (s, commands::test),
        Command::Validate(s) => (s, commands::validate),
    };
    run(&settings.resolve()?)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! `tubeflow`: volume-preserving mean curvature flow of tubes.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "tubeflow",
    version,
    about = "Volume-preserving mean curvature flow of tubes of non-constant radius",
    after_help = "Exit codes: 0 success, 1 configuration error, 2 flow failure (tube lost, radius overflow), \
                  3 failed check.\nTUBEFLOW_THREADS caps the sweep worker count.\n\
                  Run `tubeflow defaults` for a configuration listing every default."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one configuration and write series.csv, snapshots and plots.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.directory`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Skip the SVG plots.
        #[arg(long)]
        no_plots: bool,
    },
    /// Run the identity suite and the independent curvature oracles.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random samples per identity.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Check a single preset instead of every complete one.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Run the Cartesian product of the `[sweep]` ranges in parallel.
    Sweep {
        config: PathBuf,
        /// Output directory; overrides `output.directory`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the model presets.
    Presets,
    /// Print a configuration with every default.
    Defaults,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(commands::EXIT_CONFIG),
            };
        }
    };
    let result = match cli.command {
        Command::Run { config, output, no_plots } => commands::run(&config, output, no_plots),
        Command::Check { seed, samples, preset } => commands::check(seed, samples, preset.as_deref()),
        Command::Sweep { config, output } => commands::sweep(&config, output),
        Command::Presets => commands::presets(),
        Command::Defaults => commands::defaults(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_CONFIG)
        }
    }
}

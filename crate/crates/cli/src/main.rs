//! `chemnn`: compile, simulate, train and verify reaction-network programs.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 verification failure.

mod commands;
mod config;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, Mode, Overrides};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "chemnn", version, about = "Reaction-network neural network experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training iterations, or cycles of a phased simulation.
    #[arg(long)]
    max_cycles: Option<usize>,
    /// Length of every phase window.
    #[arg(long)]
    window: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Write the training program and its species table.
    Compile(Common),
    /// Integrate a reaction file and write its trajectory.
    Simulate {
        /// Reaction list.
        reactions: PathBuf,
        /// CSV with `species` and `init` columns.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        duration: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the chemical training loop.
    Train(Common),
    /// Compare the chemistry against the floating-point network.
    Verify {
        /// Program file to check against the compiled program.
        #[arg(long)]
        program: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn load(c: &Common, need_task: bool) -> Result<ExperimentConfig, CliError> {
    let ov = Overrides {
        mode: c.mode,
        out: c.out.clone(),
        max_cycles: c.max_cycles,
        window: c.window,
    };
    if need_task && c.config.is_none() {
        return Err(CliError::Config("--config is required".into()));
    }
    ExperimentConfig::load(c.config.as_deref(), &ov, need_task)
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.cmd {
        Cmd::Compile(c) => commands::compile(&load(&c, true)?),
        Cmd::Simulate {
            reactions,
            init,
            duration,
            common,
        } => commands::simulate(&load(&common, false)?, &reactions, init.as_deref(), duration),
        Cmd::Train(c) => commands::train(&load(&c, true)?),
        Cmd::Verify { program, common } => commands::verify(&load(&common, true)?, program.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(s) => {
            print!("{s}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

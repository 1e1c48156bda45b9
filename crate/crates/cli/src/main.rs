//! Command-line front end.
//!
//! Exit codes: 0 success, 2 validation failure, 3 I/O failure, 4 numerical
//! failure, 5 mode-matching failure.

mod config;
mod pipeline;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::PipelineConfig;
use modal_sentinel::error::Error;

#[derive(Parser)]
#[command(
    name = "modal-sentinel",
    version,
    about = "Snapshot-based modal identification and damage indexing for beam structures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Pipeline configuration JSON; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides the configuration's io.output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize beam free-vibration snapshots.
    Simulate,
    /// Load a PGM frame sequence into the snapshot format.
    Ingest,
    /// Identify the linear dynamics on the training split.
    Fit,
    /// Build the healthy feature baseline from a fitted model.
    Baseline,
    /// Score a fitted model against a healthy baseline.
    Score,
    /// Consolidate report.json files under a directory into markdown.
    Report,
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Validation(_) | Error::Parse { .. } => 2,
        Error::Io { .. } => 3,
        Error::Numerical(_) => 4,
        Error::Matching(_) => 5,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.io.output_dir = out.clone();
    }
    let out = config.io.output_dir.clone();
    match cli.command {
        Command::Simulate => pipeline::cmd_simulate(&config, &out, cli.quiet),
        Command::Ingest => pipeline::cmd_ingest(&config, &out, cli.quiet),
        Command::Fit => pipeline::cmd_fit(&config, &out, cli.quiet),
        Command::Baseline => pipeline::cmd_baseline(&config, &out, cli.quiet),
        Command::Score => pipeline::cmd_score(&config, &out, cli.quiet),
        Command::Report => pipeline::cmd_report(&out, cli.quiet),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            let mut source = std::error::Error::source(&error);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(exit_code(&error))
        }
    }
}

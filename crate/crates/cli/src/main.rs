//! `halftool`: halftone, train, analyze, bench, genmask, replay.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error.

mod analyze;
mod bench;
mod genmask;
mod halftone;
mod manifest;
mod replay;
mod train;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;

/// Errors that are the caller's fault rather than the data's.
#[derive(Debug)]
pub enum UsageError {
    UnknownMethod(String),
    Invalid(String),
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UsageError::UnknownMethod(m) => write!(f, "unknown method '{m}'"),
            UsageError::Invalid(s) => f.write_str(s),
        }
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError::Invalid(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(name = "halftool", version, about = "Halftoning engine: learned policy, classic baselines, blue-noise analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Halftone a grayscale image (PGM or PNG) to PBM or PNG.
    Halftone(halftone::HalftoneArgs),
    /// Train the policy network and write a checkpoint.
    Train(train::TrainArgs),
    /// Quality metrics, spectral analysis, and gray-ramp fixtures.
    Analyze(analyze::AnalyzeArgs),
    /// Time every method on the fixture corpus.
    Bench(bench::BenchArgs),
    /// Generate a void-and-cluster threshold matrix.
    Genmask(genmask::GenmaskArgs),
    /// Re-run the command recorded in a manifest.
    Replay(replay::ReplayArgs),
}

/// Parses and runs one command line. `argv[0]` is the program name.
pub fn execute(argv: &[String]) -> anyhow::Result<()> {
    let cli = Cli::try_parse_from(argv).map_err(|e| usage(e.to_string()))?;
    let recorded = manifest::Invocation::capture(argv)?;
    match cli.command {
        Command::Halftone(a) => halftone::run(a, recorded),
        Command::Train(a) => train::run(a, recorded),
        Command::Analyze(a) => analyze::run(a, recorded),
        Command::Bench(a) => bench::run(a, recorded),
        Command::Genmask(a) => genmask::run(a, recorded),
        Command::Replay(a) => replay::run(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

pub fn input_label(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    // Help and version go through clap directly so they print to stdout and exit 0.
    if let Err(e) = Cli::try_parse_from(&argv) {
        let code = e.exit_code();
        let _ = e.print();
        return ExitCode::from(if code == 0 { 0 } else { EXIT_USAGE });
    }
    match execute(&argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

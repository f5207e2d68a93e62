//! `resonant`: synthesize far-field data, locate interior Neumann
//! eigenvalues, recover resonant modes and reconstruct the obstacle.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure,
//! 4 reconstruction did not converge.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigFile, DataOpts, ModeOpts, NewtonOpts, SweepOpts};

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_NOT_CONVERGED: u8 = 4;

/// A failed command: exit code plus message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, message: message.into() }
    }

    /// Prefixes the message with a pipeline stage name.
    pub fn in_stage(self, stage: &str) -> Self {
        Self { code: self.code, message: format!("[{stage}] {}", self.message) }
    }
}

impl From<resonant::Error> for Failure {
    fn from(e: resonant::Error) -> Self {
        use resonant::Error as E;
        let code = match e {
            E::NonFinite(_)
            | E::NotPositiveDefinite
            | E::Eigensolver(_)
            | E::SolveFailed(_)
            | E::DegenerateFrame(_)
            | E::NotStarlike(_)
            | E::Bracketing(_) => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        };
        Self { code, message: e.to_string() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "resonant", version, about = "Sound-hard obstacle reconstruction from interior resonant modes")]
struct Cli {
    /// TOML file with [data], [sweep], [mode], [newton] and [pipeline] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a multi-frequency far-field dataset.
    Synth {
        #[command(flatten)]
        data: DataOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Indicator sweep over all wavenumbers and eigenvalue detection.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        sweep: SweepOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover Herglotz kernels of resonant modes at given wavenumbers.
    Eigfun {
        #[arg(long)]
        data: PathBuf,
        /// One or more comma-separated wavenumbers.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<f64>,
        #[command(flatten)]
        mode: ModeOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Newton reconstruction from one or more mode files.
    Reconstruct {
        #[arg(long, value_delimiter = ',', required = true)]
        modes: Vec<PathBuf>,
        #[command(flatten)]
        newton: NewtonOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// synth (or load) → sweep → eigfun → reconstruct.
    Pipeline {
        /// Existing dataset; when absent one is synthesized into `<out>/data`.
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        synth: DataOpts,
        #[command(flatten)]
        sweep: SweepOpts,
        #[command(flatten)]
        mode: ModeOpts,
        #[command(flatten)]
        newton: NewtonOpts,
        #[command(flatten)]
        pipeline: config::PipelineOpts,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::validation("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::validation(e.to_string()))?;
    }
    let file = ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth { data, out } => commands::synth(&data.overlay(file.data).resolve()?, &out),
        Command::Sweep { data, sweep, out } => commands::sweep(&data, &sweep.overlay(file.sweep), &out).map(|_| ()),
        Command::Eigfun { data, k, mode, out } => {
            commands::eigfun(&data, &k, &mode.overlay(file.mode).resolve()?, &out).map(|_| ())
        }
        Command::Reconstruct { modes, newton, out } => {
            commands::reconstruct(&modes, &newton.overlay(file.newton), &out)
        }
        Command::Pipeline { data, synth, sweep, mode, newton, pipeline, out } => commands::pipeline(
            data.as_deref(),
            &synth.overlay(file.data),
            &sweep.overlay(file.sweep),
            &mode.overlay(file.mode),
            &newton.overlay(file.newton),
            &pipeline.overlay(file.pipeline),
            &out,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

//! `isospec gen | verify | figure`.
//!
//! Exit codes: 0 success, 1 runtime or verification failure, 2 invalid
//! input (domain violations, bad flags or config).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
pub mod output;

pub use config::{CommandKind, Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<isospec::Error> for CliError {
    fn from(e: isospec::Error) -> Self {
        if e.is_domain() {
            CliError::Domain(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "isospec", version, about = "Almost-isospectral partners of the hydrogen-like radial Hamiltonian")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a partner potential, its missing states and a manifest.
    Gen(FamilyArgs),
    /// Compare predicted and computed spectra; exit 1 on mismatch.
    Verify(VerifyArgs),
    /// Data behind the two figure presets.
    Figure(FigureArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub rmin: Option<f64>,
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    /// JSON file with any subset of the run configuration fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub l: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<i32>,
    /// Second index of a second-order family.
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<i32>,
    /// Chain of indices, e.g. `--ks=0,-1,-2`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub ks: Vec<i32>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// One λ per stage, e.g. `--lambdas=-0.5,0.5`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambdas: Vec<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Number of levels reported (and computed, for verify).
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory (gen) or report file (verify).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Shift the lowest predicted level before comparing (negative control).
    #[arg(long, hide = true, allow_negative_numbers = true)]
    pub inject_prediction_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig1,
    Fig2,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub preset: Preset,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// False when verification ran and failed.
    pub passed: bool,
    pub summary: String,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Gen(args) => commands::gen(&commands::resolve(CommandKind::Gen, &args)?),
        Command::Verify(args) => commands::verify(
            &commands::resolve(CommandKind::Verify, &args.family)?,
            args.inject_prediction_error,
        ),
        Command::Figure(args) => commands::figure(&args),
    }
}

/// Parse, run and map to an exit code; messages go to stdout/stderr.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

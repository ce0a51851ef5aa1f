//! `orbitpair`: enumerate periodic orbits, detect encounters, build and
//! verify partner orbits, run the lemma suites, and plot.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 nothing found.

mod commands;
mod config;
mod output;
mod svg;

use clap::{Parser, Subcommand, ValueEnum};
use config::RunConfig;
use orbitpair::suites::Fault;
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable holding the worker thread count.
const THREADS_VAR: &str = "ORBITPAIR_THREADS";

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn failure(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
    pub fn internal(message: impl Into<String>) -> Self {
        Self::failure(message)
    }
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
    pub fn nothing(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "orbitpair", version, about = "Periodic-orbit partners on hyperbolic surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for reports; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tabular output format (orbits, encounters, partners).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Also write an SVG of the first encounter and its partners.
    #[arg(long, global = true)]
    svg: bool,
    /// Restrict to one orbit, e.g. `g1.g2^-1`.
    #[arg(long, global = true)]
    orbit: Option<String>,
    /// Perturb a suite to exercise the failure path.
    #[arg(long, global = true, value_enum)]
    inject_fault: Option<FaultArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FaultArg {
    ClosingPeriod,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Conjugacy classes up to the word-length budget (CSV by default).
    Orbits,
    /// Encounters on the enumerated, selected or synthetic orbit.
    Encounters,
    /// Partner orbits of every admissible encounter (JSON by default).
    Partners,
    /// Randomized lemma suites.
    Verify,
    /// SVG of an orbit, its encounter region and its partners.
    Plot,
}

pub struct Options {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub svg: bool,
    pub orbit: Option<String>,
    pub fault: Option<Fault>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.validate()?;
    let default_format = match cli.command {
        Command::Orbits | Command::Encounters => Format::Csv,
        _ => Format::Json,
    };
    let opts = Options {
        seed: cli.seed,
        out: cli.out,
        format: cli.format.unwrap_or(default_format),
        svg: cli.svg,
        orbit: cli.orbit,
        fault: cli.inject_fault.map(|f| match f {
            FaultArg::ClosingPeriod => Fault::ClosingPeriod,
        }),
    };
    match cli.command {
        Command::Orbits => commands::orbits(&cfg, &opts),
        Command::Encounters => commands::encounters(&cfg, &opts),
        Command::Partners => commands::partners(&cfg, &opts),
        Command::Verify => commands::verify(&cfg, &opts),
        Command::Plot => commands::plot(&cfg, &opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match e.code {
                2 => "configuration error",
                3 => "nothing found",
                _ => "verification failed",
            };
            eprintln!("{kind}: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

//! The `infoflow` command-line front end.

mod ad;
pub mod config;
mod output;
mod price;
mod rates;
mod reduce;
mod simulate;
mod verify;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;

pub use output::Output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Verification(_) => EXIT_VERIFY,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::MaturitySingularity { .. }
            | Error::GreeksUndefined(_)
            | Error::UnsupportedPayout(_)
            | Error::UnsupportedSize(_) => CliError::Config(e.to_string()),
            Error::Divergence(_) | Error::NoSolution(_) | Error::DegenerateDistribution { .. } => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "infoflow", version, about = "Information-based asset pricing toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory, created when missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Run the cross-checks of the command and fail on any violation.
    #[arg(long, global = true)]
    pub verify: bool,
    /// Override a check tolerance, as `name=value`.
    #[arg(long = "tolerance", global = true, value_parser = parse_override)]
    pub tolerances: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulated bond price paths over a grid of information rates.
    Simulate,
    /// Price one instrument and report cross-method agreement.
    Price,
    /// Reduce dependent binary factors to independent ones.
    Reduce,
    /// Discrete-time term structure from a pricing kernel.
    Rates,
    /// Tabulate an Arrow-Debreu density.
    AdDensity,
    /// Run the built-in cross-check suite.
    Verify,
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected name=value")?;
    let value: f64 = value.parse().map_err(|e| format!("{e}"))?;
    if !(value >= 0.0) {
        return Err("tolerance must be non-negative".into());
    }
    Ok((name.to_string(), value))
}

/// Named numerical cross-checks with overridable tolerances.
#[derive(Debug, Default, Serialize)]
pub struct Checks {
    pub items: Vec<Check>,
    #[serde(skip)]
    overrides: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Checks {
    pub fn new(overrides: BTreeMap<String, f64>) -> Self {
        Checks { items: Vec::new(), overrides }
    }

    /// Passes when `error <= tolerance`; NaN fails.
    pub fn record(&mut self, name: &str, error: f64, tolerance: f64) {
        let tolerance = self.overrides.get(name).copied().unwrap_or(tolerance);
        self.items.push(Check { name: name.to_string(), error, tolerance, pass: error <= tolerance });
    }

    pub fn flag(&mut self, name: &str, ok: bool) {
        self.record(name, if ok { 0.0 } else { 1.0 }, 0.0);
    }

    pub fn failures(&self) -> Vec<&str> {
        self.items.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    fn unknown_overrides(&self) -> Vec<&str> {
        self.overrides.keys().filter(|k| !self.items.iter().any(|c| &c.name == *k)).map(|k| k.as_str()).collect()
    }
}

pub struct Context {
    pub cli: Cli,
    pub checks: Checks,
    pub output: Output,
}

impl Context {
    fn config_path(&self) -> Result<&std::path::Path, CliError> {
        self.cli.config.as_deref().ok_or_else(|| CliError::Config("--config is required for this command".into()))
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("INFOFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("INFOFLOW_THREADS must be a positive integer, got {raw:?}")))?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Run with explicit arguments; returns the process exit code.
pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("infoflow: {e}");
            e.exit_code()
        }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args_os())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let overrides = cli.tolerances.iter().cloned().collect();
    let output = Output::new(cli.out.clone(), cli.format)?;
    let mut ctx = Context { cli, checks: Checks::new(overrides), output };
    match ctx.cli.command {
        Command::Simulate => simulate::run(&mut ctx)?,
        Command::Price => price::run(&mut ctx)?,
        Command::Reduce => reduce::run(&mut ctx)?,
        Command::Rates => rates::run(&mut ctx)?,
        Command::AdDensity => ad::run(&mut ctx)?,
        Command::Verify => verify::run(&mut ctx)?,
    }
    let unknown = ctx.checks.unknown_overrides();
    if !unknown.is_empty() {
        return Err(CliError::Config(format!("unknown tolerance names: {}", unknown.join(", "))));
    }
    if ctx.cli.verify || ctx.cli.command == Command::Verify {
        for c in &ctx.checks.items {
            println!("{} {} error={:e} tolerance={:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.error, c.tolerance);
        }
        let failed = ctx.checks.failures();
        if !failed.is_empty() {
            return Err(CliError::Verification(failed.join(", ")));
        }
    }
    Ok(())
}

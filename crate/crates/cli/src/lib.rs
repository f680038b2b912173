//! Command-line front end: point evaluation, contour grids, approximation
//! sweeps, rate predictions, Fekete searches and random-field runs.
//!
//! Every command writes a `manifest.json` run manifest into its output
//! directory. Exit codes: 0 success, 2 argument/parse, 3 convergence,
//! 4 I/O, 5 resource cap.

// `!(x > a)` checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

pub mod commands;
pub mod parse;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "PEXTREMAL_THREADS";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Convergence(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Cap(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Io(_) => 4,
            CliError::Cap(_) => 5,
        }
    }
}

impl From<pextremal::Error> for CliError {
    fn from(e: pextremal::Error) -> Self {
        use pextremal::Error as E;
        match e {
            E::Convergence { .. } | E::Truncation { .. } => CliError::Convergence(e.to_string()),
            E::ResourceCap { .. } => CliError::Cap(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pextremal",
    version,
    about = "P-extremal functions of the complex unit ball"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate V_{P,B} at one point and print the result as JSON.
    Eval(commands::EvalArgs),
    /// Write V over a (|z1|, |z2|) grid for each q.
    Contour(commands::ContourArgs),
    /// Best-L2 approximation errors for n = 1..nmax.
    Approx(commands::ApproxArgs),
    /// Predicted exponential decay rate from the singular set.
    Rate(commands::RateArgs),
    /// Exchange search for Fekete-like points on the unit sphere of C^2.
    Fekete(commands::FeketeArgs),
    /// Deviation of random-polynomial potentials from V on an annulus grid.
    Randfield(commands::RandfieldArgs),
}

/// Run manifest written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: &'static str,
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
    pub wall_time_ms: u64,
    pub outputs: Vec<String>,
}

/// What a command produced, before the manifest is written.
pub struct Outcome {
    pub parameters: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub stdout: Option<Value>,
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                write!(stdout, "{e}")?;
                return Ok(());
            }
            return Err(CliError::Usage(e.to_string()));
        }
    };
    let start = Instant::now();
    let (name, out_dir, outcome) = match &cli.command {
        Command::Eval(a) => ("eval", a.out.clone(), commands::eval(a)?),
        Command::Contour(a) => ("contour", a.out.clone(), commands::contour(a)?),
        Command::Approx(a) => ("approx", a.out.clone(), commands::approx(a)?),
        Command::Rate(a) => ("rate", a.out.clone(), commands::rate(a)?),
        Command::Fekete(a) => ("fekete", a.out.clone(), commands::fekete(a)?),
        Command::Randfield(a) => ("randfield", a.out.clone(), commands::randfield(a)?),
    };
    if let Some(v) = &outcome.stdout {
        writeln!(
            stdout,
            "{}",
            serde_json::to_string_pretty(v).expect("json value")
        )?;
    }
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        command: name.to_string(),
        parameters: outcome.parameters,
        seed: outcome.seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        wall_time_ms: start.elapsed().as_millis() as u64,
        outputs: outcome
            .outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
    };
    write_json(&out_dir.join(MANIFEST_FILE), &json!(manifest))?;
    Ok(())
}

/// Applies `PEXTREMAL_THREADS` to the global thread pool.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

pub(crate) fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("json value");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// CSV writer with a header row and `\n` line endings.
pub(crate) fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>, CliError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let file = fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(header)?;
    Ok(w)
}

//! Reproducible command-line runs over `lmg-core`.
//!
//! Every run reads one JSON configuration, writes its tables as CSV (or
//! JSON) plus a report that echoes the input and all defaults used, and
//! stamps each table with the SHA-256 of that report.

use std::path::PathBuf;

use clap::Parser;
use serde_json::Value;

pub mod commands;
pub mod config;
pub mod output;

pub use config::{Command, Emit, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Cutoff(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Cutoff(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical validity error: {m}"),
            CliError::Cutoff(m) => write!(f, "cutoff overflow: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<lmg_core::Error> for CliError {
    fn from(e: lmg_core::Error) -> Self {
        use lmg_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParameter(_)
            | E::BasisMismatch(_)
            | E::DimensionMismatch { .. }
            | E::UnsupportedCase(_)
            | E::Domain(_) => CliError::Config(msg),
            E::NotHermitian { .. } | E::NonFinite(_) | E::InapplicableBound(_) => CliError::Numerical(msg),
            E::CutoffOverflow { .. } => CliError::Cutoff(msg),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lmg", version, about = "Adiabatic entanglement in collective spin models")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for `scan`.
    #[arg(long)]
    pub threads: Option<usize>,
    /// `key=value`, dotted key; may be repeated.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: u8,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    /// Set when the run finished but failed a validity check.
    pub failure: Option<CliError>,
}

pub fn run(args: &Args) -> Result<RunOutcome, CliError> {
    let mut doc = match &args.config {
        Some(path) => config::read_document(path)?,
        None => Value::Object(Default::default()),
    };
    for spec in &args.overrides {
        config::apply_override(&mut doc, spec)?;
    }
    if let Some(out) = &args.out {
        doc["out_dir"] = Value::String(out.display().to_string());
    }
    if let Some(k) = args.threads {
        doc["threads"] = Value::from(k);
    }
    let cfg = RunConfig::from_document(&doc)?;
    if let Some(c) = cfg.command {
        if c != args.command {
            return Err(CliError::Config(format!(
                "config is for `{}` but `{}` was requested",
                c.name(),
                args.command.name()
            )));
        }
    }
    if cfg.threads == Some(0) {
        return Err(CliError::Config("threads must be at least 1".into()));
    }

    let out = commands::execute(args.command, &cfg)?;
    let stem = cfg.name.clone().unwrap_or_else(|| args.command.name().to_string());
    if stem.is_empty() || stem.contains(['/', '\\']) {
        return Err(CliError::Config(format!("name `{stem}` is not a plain file stem")));
    }
    let report = output::RunReport {
        tool: "lmg",
        version: env!("CARGO_PKG_VERSION"),
        core_version: lmg_core::VERSION,
        command: args.command,
        input: doc,
        resolved: out.resolved,
        defaults: out.defaults,
        results: out.results,
        files: output::file_names(&stem, &out.tables, cfg.emit),
    };
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let files = output::write_all(&dir, &stem, cfg.emit, &out.tables, &report)?;
    Ok(RunOutcome {
        exit_code: out.failure.as_ref().map_or(0, CliError::exit_code),
        files,
        summary: out.summary,
        failure: out.failure,
    })
}

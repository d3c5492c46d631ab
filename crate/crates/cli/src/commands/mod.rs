use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::config::{Command, RunConfig};
use crate::output::Table;
use crate::CliError;

pub mod compare;
pub mod evolve;
pub mod gap;
pub mod scan;
pub mod spectrum;
pub mod susy;

/// What a command hands back for writing.
#[derive(Debug, Default)]
pub struct CommandOutput {
    pub tables: Vec<(String, Table)>,
    pub resolved: Value,
    pub defaults: BTreeMap<String, Value>,
    pub results: Value,
    pub summary: Vec<String>,
    /// The run completed but a validity check failed; files are still written.
    pub failure: Option<CliError>,
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    match command {
        Command::Spectrum => spectrum::run(&cfg.params(command)?),
        Command::SusyCheck => susy::run(&cfg.params(command)?),
        Command::Evolve => evolve::run(&cfg.params(command)?),
        Command::GapBound => gap::run(&cfg.params(command)?),
        Command::IontrapCompare => compare::run(&cfg.params(command)?),
        Command::Scan => scan::run(&cfg.params(command)?, cfg.threads),
    }
}

pub(crate) fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// Conventions shared by every command.
pub(crate) fn base_defaults() -> BTreeMap<String, Value> {
    let mut d = BTreeMap::new();
    d.insert("basis_order".into(), Value::from("m ascending, index 0 is m = -J"));
    d.insert(
        "y_state_phase".into(),
        Value::from("largest component of each m_y state real and positive"),
    );
    d.insert(
        "hamiltonian".into(),
        Value::from("xi [lambda chi1 chi2 Jz + chi1^2 Jx^2 + chi2^2 Jy^2 - 2 mu chi2^2 Jy]"),
    );
    d
}

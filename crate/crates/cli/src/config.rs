//! Run configuration: one JSON document per run, patched by `--override`.
//!
//! Precedence, lowest first: built-in defaults, the config file,
//! `--override key=value` in the order given, then `--out` and `--threads`.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    SusyCheck,
    Evolve,
    GapBound,
    IontrapCompare,
    Scan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::SusyCheck => "susy-check",
            Command::Evolve => "evolve",
            Command::GapBound => "gap-bound",
            Command::IontrapCompare => "iontrap-compare",
            Command::Scan => "scan",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must agree with the command given on the command line when present.
    #[serde(default)]
    pub command: Option<Command>,
    /// Stem of the output files; defaults to the command name.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub emit: Emit,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Command-specific block, checked against the command's schema.
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Map::new())
}

const TOP_LEVEL: [&str; 6] = ["command", "name", "out_dir", "emit", "threads", "params"];

pub fn read_document(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if !doc.is_object() {
        return Err(CliError::Config(format!("{}: top level must be an object", path.display())));
    }
    Ok(doc)
}

/// Applies `key=value`. The key is a dotted path; paths that do not start
/// with a top-level key are taken relative to `params`. The value is read as
/// JSON and falls back to a plain string.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not key=value")))?;
    let mut path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|s| s.is_empty()) {
        return Err(CliError::Config(format!("override key `{key}` has an empty segment")));
    }
    if !TOP_LEVEL.contains(&path[0]) {
        path.insert(0, "params");
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));

    let mut node = doc;
    for (i, seg) in path.iter().enumerate() {
        let last = i + 1 == path.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert_with(empty_object)
            }
            Value::Array(items) => {
                let k: usize = seg
                    .parse()
                    .map_err(|_| CliError::Config(format!("override `{key}`: `{seg}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(k)
                    .ok_or_else(|| CliError::Config(format!("override `{key}`: index {k} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => {
                return Err(CliError::Config(format!(
                    "override `{key}`: `{}` is not an object",
                    path[..i].join(".")
                )))
            }
        };
    }
    Ok(())
}

impl RunConfig {
    pub fn from_document(doc: &Value) -> Result<Self, CliError> {
        serde_json::from_value(doc.clone()).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Decodes the `params` block for the command.
    pub fn params<T: DeserializeOwned>(&self, command: Command) -> Result<T, CliError> {
        serde_json::from_value(self.params.clone())
            .map_err(|e| CliError::Config(format!("params for {}: {e}", command.name())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn override_relative_to_params() {
        let mut doc = json!({"params": {"model": {"lmg": {"xi": 1.0}}}});
        apply_override(&mut doc, "model.lmg.xi=-0.5").unwrap();
        apply_override(&mut doc, "emit=json").unwrap();
        apply_override(&mut doc, "model.lmg.j=2").unwrap();
        assert_eq!(doc["params"]["model"]["lmg"]["xi"], json!(-0.5));
        assert_eq!(doc["params"]["model"]["lmg"]["j"], json!(2));
        assert_eq!(doc["emit"], json!("json"));
    }

    #[test]
    fn override_into_arrays_and_strings() {
        let mut doc = json!({"params": {"ns": [4, 6]}});
        apply_override(&mut doc, "params.ns.1=8").unwrap();
        apply_override(&mut doc, "name=run one").unwrap();
        assert_eq!(doc["params"]["ns"], json!([4, 8]));
        assert_eq!(doc["name"], json!("run one"));
        assert!(apply_override(&mut doc, "params.ns.5=1").is_err());
        assert!(apply_override(&mut doc, "params.ns.x=1").is_err());
        assert!(apply_override(&mut doc, "nokey").is_err());
        assert!(apply_override(&mut doc, "a..b=1").is_err());
    }

    #[test]
    fn unknown_top_level_key_rejected() {
        let doc = json!({"command": "evolve", "colour": "red"});
        assert!(matches!(RunConfig::from_document(&doc), Err(CliError::Config(_))));
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::from_document(&json!({})).unwrap();
        assert_eq!(cfg.emit, Emit::Csv);
        assert!(cfg.command.is_none() && cfg.params.is_object());
    }
}

//! Tables, run reports, and the files they are written to.
//!
//! Numbers are written with 17 significant digits so that every f64 round
//! trips; absent values are NaN in memory and empty cells on disk.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Command, Emit};
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Column-name form of a projection label: `-1.5` becomes `m-1.5`.
pub fn level_name(prefix: &str, m: f64) -> String {
    format!("{prefix}_m{m}")
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: Command,
    /// Configuration document after overrides and flags.
    pub input: Value,
    /// Typed parameters with every serde default filled in.
    pub resolved: Value,
    /// Conventions and derived settings that the input does not state.
    pub defaults: BTreeMap<String, Value>,
    pub results: Value,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("report serializes");
        let hash = Sha256::digest(&bytes);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn file_names(stem: &str, tables: &[(String, Table)], emit: Emit) -> Vec<String> {
    let ext = match emit {
        Emit::Csv => "csv",
        Emit::Json => "json",
    };
    let mut names: Vec<String> = tables.iter().map(|(t, _)| format!("{stem}.{t}.{ext}")).collect();
    names.push(format!("{stem}.report.json"));
    names
}

fn write_csv(path: &Path, table: &Table, digest: &str) -> Result<(), CliError> {
    let mut buf = format!("# report sha256 {digest}\n").into_bytes();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        w.write_record(&table.columns).map_err(io_err)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|&x| format_number(x))).map_err(io_err)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    fs::write(path, buf).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_json_table(path: &Path, table: &Table, digest: &str) -> Result<(), CliError> {
    let rows: Vec<Vec<Value>> = table
        .rows
        .iter()
        .map(|r| r.iter().map(|&x| if x.is_finite() { json!(x) } else { Value::Null }).collect())
        .collect();
    let doc = json!({"report_sha256": digest, "columns": table.columns, "rows": rows});
    write_value(path, &doc)
}

fn write_value(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Writes every table and the report; returns the paths written.
pub fn write_all(
    dir: &Path,
    stem: &str,
    emit: Emit,
    tables: &[(String, Table)],
    report: &RunReport,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let digest = report.digest();
    let names = file_names(stem, tables, emit);
    let mut written = Vec::new();
    for ((_, table), name) in tables.iter().zip(&names) {
        let path = dir.join(name);
        match emit {
            Emit::Csv => write_csv(&path, table, &digest)?,
            Emit::Json => write_json_table(&path, table, &digest)?,
        }
        written.push(path);
    }
    let path = dir.join(names.last().expect("report name"));
    let doc = json!({"sha256": digest, "report": serde_json::to_value(report).expect("report serializes")});
    write_value(&path, &doc)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_number(f64::NAN), "");
        assert_eq!(format_number(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout() {
        let dir = std::env::temp_dir().join(format!("lmg-out-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.push(vec![1.0, f64::NAN]);
        let path = dir.join("t.csv");
        write_csv(&path, &t, "abc").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# report sha256 abc\na,b\n1.0000000000000000e0,\n");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn level_names() {
        assert_eq!(level_name("p", -1.5), "p_m-1.5");
        assert_eq!(level_name("p", 2.0), "p_m2");
    }
}

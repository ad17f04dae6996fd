//! Result tables and their CSV / JSON rendering.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub const VERSION: &str = env!("DISKWALK_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{}", v + 0.0),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Num(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Num(_) => s.serialize_none(),
            Cell::Int(v) => s.serialize_u64(*v),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Everything a subcommand produces.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
    pub summary: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Header comment lines: version, command, resolved config, and a timestamp
/// unless `deterministic`.
fn header_lines(report: &Report, deterministic: bool) -> Vec<String> {
    let mut lines = vec![format!("diskwalk {VERSION}"), format!("command: {}", report.command), format!("config: {}", report.config)];
    if !deterministic {
        let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        lines.push(format!("timestamp: {secs}"));
    }
    lines
}

pub fn render_csv(report: &Report, deterministic: bool) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    for line in header_lines(report, deterministic) {
        writeln!(buf, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(report.columns)?;
    for row in &report.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

pub fn summary_json(report: &Report, deterministic: bool) -> Value {
    let mut v = json!({
        "version": VERSION,
        "command": report.command,
        "config": report.config,
        "summary": report.summary,
    });
    if !deterministic {
        v["header"] = json!(header_lines(report, false));
    }
    v
}

pub fn render_json(report: &Report, deterministic: bool) -> Result<Vec<u8>, CliError> {
    let mut v = summary_json(report, deterministic);
    v["columns"] = json!(report.columns);
    v["rows"] = serde_json::to_value(&report.rows)?;
    let mut out = serde_json::to_vec_pretty(&v)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

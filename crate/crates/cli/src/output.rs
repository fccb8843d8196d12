//! CSV/JSON table emission. Every file starts with the command, the manifest
//! hash and the seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::manifest::OutputFormat;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    B(bool),
    /// Written as an empty CSV field and JSON `null`.
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => format!("{v}"),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
            Cell::B(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) if v.is_finite() => json!(v),
            Cell::F(_) | Cell::Missing => Value::Null,
            Cell::U(v) => json!(v),
            Cell::S(s) => json!(s),
            Cell::B(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::F)
    }
}

/// Provenance written at the top of every file.
#[derive(Debug, Clone)]
pub struct Header {
    pub command: &'static str,
    pub manifest_sha256: String,
    pub seed: u64,
    /// Extra `key=value` lines, e.g. the cell a trace belongs to.
    pub meta: Vec<(String, String)>,
}

impl Header {
    pub fn with(&self, key: &str, value: impl ToString) -> Header {
        let mut h = self.clone();
        h.meta.push((key.to_string(), value.to_string()));
        h
    }

    /// Lines for formats that only carry free-text comments.
    pub fn comment_lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("dqsync {}", self.command),
            format!("manifest_sha256={}", self.manifest_sha256),
            format!("seed={}", self.seed),
        ];
        v.extend(self.meta.iter().map(|(k, val)| format!("{k}={val}")));
        v
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, header: &Header, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => {
                let mut s = String::new();
                for line in header.comment_lines() {
                    s.push_str("# ");
                    s.push_str(&line);
                    s.push('\n');
                }
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
            OutputFormat::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let m: Map<String, Value> =
                            self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect();
                        Value::Object(m)
                    })
                    .collect();
                let mut top = Map::new();
                top.insert("command".into(), json!(header.command));
                top.insert("manifest_sha256".into(), json!(header.manifest_sha256));
                top.insert("seed".into(), json!(header.seed));
                for (k, v) in &header.meta {
                    top.insert(k.clone(), json!(v));
                }
                top.insert("rows".into(), Value::Array(rows));
                let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("serializable");
                s.push('\n');
                s
            }
        }
    }

    /// Writes `<dir>/<stem>.<ext>` and returns its path.
    pub fn write(&self, dir: &Path, stem: &str, header: &Header, format: OutputFormat) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        write_file(&path, self.render(header, format).as_bytes())?;
        Ok(path)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.flush().map_err(io)
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", dir.display())))
}

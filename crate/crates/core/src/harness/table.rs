//! Column-ordered result tables and their CSV / JSON forms.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Bool(bool),
    Int(i64),
    UInt(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::UInt(v) => Some(*v as f64),
            _ => None,
        }
    }

    fn to_csv(&self) -> String {
        match self {
            Cell::Bool(b) => b.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => float_text(*v),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }

    fn from_csv(s: &str) -> Cell {
        match s {
            "true" => return Cell::Bool(true),
            "false" => return Cell::Bool(false),
            "NaN" => return Cell::Float(f64::NAN),
            "inf" => return Cell::Float(f64::INFINITY),
            "-inf" => return Cell::Float(f64::NEG_INFINITY),
            _ => {}
        }
        if s.contains('e') {
            if let Ok(v) = s.parse::<f64>() {
                return Cell::Float(v);
            }
        }
        if let Ok(v) = s.parse::<i64>() {
            return Cell::Int(v);
        }
        if let Ok(v) = s.parse::<u64>() {
            return Cell::UInt(v);
        }
        Cell::Text(s.to_string())
    }
}

/// Non-finite floats are written as the strings `NaN`, `inf`, `-inf`.
impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Bool(b) => s.serialize_bool(*b),
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::UInt(v) => s.serialize_u64(*v),
            Cell::Float(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Float(v) => s.serialize_str(&float_text(*v)),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::UInt(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Seventeen significant digits; round-trips every finite `f64`.
fn float_text(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column.
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[j].as_f64().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn drop_column(&mut self, name: &str) {
        if let Some(j) = self.column(name) {
            self.columns.remove(j);
            for r in &mut self.rows {
                r.remove(j);
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::to_csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Parses CSV text, skipping `#` metadata lines. Quoted text cells may
    /// contain commas and doubled quotes, but not newlines.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let columns: Vec<String> = split_csv(header).into_iter().collect();
        let mut rows = Vec::new();
        for (ln, line) in lines {
            let cells: Vec<Cell> = split_csv(line).iter().map(|c| Cell::from_csv(c)).collect();
            if cells.len() != columns.len() {
                return Err(Error::Parse {
                    line: ln + 1,
                    message: format!("expected {} cells, found {}", columns.len(), cells.len()),
                });
            }
            rows.push(cells);
        }
        Ok(Self { columns, rows })
    }
}

fn split_csv(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

/// Provenance written ahead of every emitted table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config_sha256: String,
}

impl Metadata {
    fn csv_line(&self) -> String {
        format!(
            "# tool={} version={} experiment={} config_sha256={}\n",
            self.tool, self.version, self.experiment, self.config_sha256
        )
    }

    pub fn parse_csv_line(line: &str) -> Option<Self> {
        let body = line.strip_prefix("# ")?;
        let get = |key: &str| {
            body.split(' ')
                .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
                .map(str::to_string)
        };
        Some(Self {
            tool: get("tool")?,
            version: get("version")?,
            experiment: get("experiment")?,
            config_sha256: get("config_sha256")?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonDoc {
    metadata: Metadata,
    table: Table,
}

/// Writes `table` to `path`. Empty tables are refused before any file is
/// created.
pub fn write_table(table: &Table, meta: &Metadata, path: &Path, format: Format) -> Result<()> {
    if table.is_empty() {
        return Err(Error::param(format!(
            "refusing to write an empty table to {}",
            path.display()
        )));
    }
    let text = match format {
        Format::Csv => {
            let mut s = meta.csv_line();
            let _ = write!(s, "{}", table.to_csv());
            s
        }
        Format::Json => {
            let doc = JsonDoc {
                metadata: meta.clone(),
                table: table.clone(),
            };
            let mut s = serde_json::to_string_pretty(&doc)
                .map_err(|e| Error::numeric(format!("JSON encoding: {e}")))?;
            s.push('\n');
            s
        }
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a table written by [`write_table`], with its metadata when present.
pub fn read_table(path: &Path) -> Result<(Option<Metadata>, Table)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        let doc: JsonDoc = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut table = doc.table;
        for cell in table.rows.iter_mut().flatten() {
            if let Cell::Text(t) = cell {
                if matches!(t.as_str(), "NaN" | "inf" | "-inf") {
                    *cell = Cell::from_csv(t);
                }
            }
        }
        return Ok((Some(doc.metadata), table));
    }
    let meta = text.lines().next().and_then(Metadata::parse_csv_line);
    Ok((meta, Table::from_csv(&text)?))
}

pub(crate) fn with_suffix(base: &Path, suffix: &str, format: Format) -> PathBuf {
    let mut name = base
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(format!(".{suffix}.{}", format.extension()));
    base.with_file_name(name)
}

//! Tabular reports in CSV or JSON.
//!
//! CSV files start with `#` provenance lines (tool version, seed, resolved
//! configuration as JSON) followed by a header row. JSON files hold the
//! same provenance as top-level keys plus `columns` and `rows`, where each
//! row is an object keyed by column name. Non-finite numbers are written
//! as `inf`, `-inf` and `nan` in both formats (as strings in JSON).

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Map, Value};

use crate::config::{Config, Format};
use crate::VERSION;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    List(Vec<f64>),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

fn csv_field(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format_f64(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::List(vs) => vs.iter().map(|v| format_f64(*v)).collect::<Vec<_>>().join(";"),
        Cell::Empty => String::new(),
    }
}

fn json_num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(format_f64(v))
    }
}

fn json_value(c: &Cell) -> Value {
    match c {
        Cell::Num(v) => json_num(*v),
        Cell::Int(v) => json!(v),
        Cell::Text(s) => Value::String(s.clone()),
        Cell::List(vs) => Value::Array(vs.iter().map(|v| json_num(*v)).collect()),
        Cell::Empty => Value::Null,
    }
}

#[derive(Debug, Clone, PartialEq)]
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

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn provenance(cfg: &Config) -> Value {
        serde_json::to_value(cfg).expect("config serializes")
    }

    pub fn to_csv(&self, cfg: &Config) -> String {
        let mut out = format!(
            "# tool: smo-enhance {VERSION}\n# seed: {}\n# config: {}\n",
            cfg.run.seed,
            Self::provenance(cfg)
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(csv_field)).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
        out
    }

    pub fn to_json(&self, cfg: &Config) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: Map<String, Value> = self.columns.iter().cloned().zip(r.iter().map(json_value)).collect();
                Value::Object(m)
            })
            .collect();
        let doc = json!({
            "tool_version": VERSION,
            "seed": cfg.run.seed,
            "config": Self::provenance(cfg),
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json");
        s.push('\n');
        s
    }

    pub fn render(&self, cfg: &Config, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(cfg),
            Format::Json => self.to_json(cfg),
        }
    }

    /// Writes `<dir>/<stem>.<ext>` and returns the path.
    pub fn write(&self, dir: &Path, stem: &str, cfg: &Config, format: Format) -> Result<PathBuf> {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        let mut f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        f.write_all(self.render(cfg, format).as_bytes())?;
        Ok(path)
    }
}

/// A report read back from disk, with every cell as a string.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub tool_version: String,
    pub seed: u64,
    pub config: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedReport {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn get(&self, row: usize, col: &str) -> Option<&str> {
        self.column(col).map(|c| self.rows[row][c].as_str())
    }

    pub fn num(&self, row: usize, col: &str) -> Option<f64> {
        self.get(row, col).and_then(parse_f64)
    }
}

pub fn parse_csv(text: &str) -> Result<ParsedReport> {
    let mut version = None;
    let mut seed = None;
    let mut config = None;
    let mut body = String::new();
    for line in text.lines() {
        if let Some(v) = line.strip_prefix("# tool: smo-enhance ") {
            version = Some(v.to_string());
        } else if let Some(v) = line.strip_prefix("# seed: ") {
            seed = Some(v.parse()?);
        } else if let Some(v) = line.strip_prefix("# config: ") {
            config = Some(serde_json::from_str(v)?);
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let columns = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()?;
    Ok(ParsedReport {
        tool_version: version.context("missing tool line")?,
        seed: seed.context("missing seed line")?,
        config: config.context("missing config line")?,
        columns,
        rows,
    })
}

fn json_cell_text(v: &Value) -> Result<String> {
    Ok(match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.to_string()
            } else {
                format_f64(n.as_f64().context("number")?)
            }
        }
        Value::Array(a) => a.iter().map(json_cell_text).collect::<Result<Vec<_>>>()?.join(";"),
        other => bail!("unexpected cell {other}"),
    })
}

pub fn parse_json(text: &str) -> Result<ParsedReport> {
    let doc: Value = serde_json::from_str(text)?;
    let columns: Vec<String> = serde_json::from_value(doc["columns"].clone())?;
    let rows = doc["rows"]
        .as_array()
        .context("rows")?
        .iter()
        .map(|r| columns.iter().map(|c| json_cell_text(&r[c])).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(ParsedReport {
        tool_version: doc["tool_version"].as_str().context("tool_version")?.to_string(),
        seed: doc["seed"].as_u64().context("seed")?,
        config: doc["config"].clone(),
        columns,
        rows,
    })
}

pub fn parse_file(path: &Path) -> Result<ParsedReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => parse_json(&text),
        _ => parse_csv(&text),
    }
}

/// Mean of each listed column over `rows`, skipping empty cells.
pub fn column_means(table: &Table, rows: &[usize], columns: &[&str]) -> Vec<Option<f64>> {
    columns
        .iter()
        .map(|name| {
            let c = table.column(name).expect("known column");
            let vals: Vec<f64> = rows.iter().filter_map(|&r| table.rows[r][c].as_f64()).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect()
}

//! Self-describing result tables.
//!
//! Every artifact embeds the tool version, global seed, the resolved
//! configuration as canonical JSON, and its SHA-256 hash, so a run can be
//! reproduced from the file alone.  Rates print to six decimals; counts
//! print exactly.  Re-running an identical configuration yields identical
//! bytes except for the timestamp field.

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::Format;
use crate::CliError;

/// Bump when any emitted schema changes shape.
pub const SCHEMA_VERSION: u32 = 1;

/// One table cell.
#[derive(Debug, Clone)]
pub enum Cell {
    UInt(u64),
    Float(f64),
    Text(String),
    Bool(bool),
    /// Absent value (CSV: empty field; JSON: null).
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.6}"),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::UInt(v) => (*v).into(),
            Cell::Float(v) => {
                let rounded: f64 = format!("{v:.6}").parse().unwrap_or(*v);
                serde_json::Number::from_f64(rounded)
                    .map(serde_json::Value::Number)
                    .unwrap_or(serde_json::Value::Null)
            }
            Cell::Text(s) => s.clone().into(),
            Cell::Bool(b) => (*b).into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

/// A finished study result.
pub struct Table {
    pub schema: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(schema: &'static str, columns: Vec<&'static str>) -> Self {
        Self {
            schema,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Provenance attached to every artifact.
pub struct Meta {
    pub seed: u64,
    /// Canonical single-line JSON of the resolved study parameters.
    pub config_json: String,
    pub config_hash: String,
    pub timestamp: u64,
}

impl Meta {
    pub fn new<C: Serialize>(seed: u64, params: &C) -> Result<Self, CliError> {
        let config_json = serde_json::to_string(params)
            .map_err(|e| CliError::config(format!("cannot serialize config: {e}")))?;
        let config_hash = hex::encode(Sha256::digest(config_json.as_bytes()));
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(Self {
            seed,
            config_json,
            config_hash,
            timestamp,
        })
    }
}

fn render_csv(table: &Table, meta: &Meta) -> String {
    let mut out = String::new();
    out.push_str(&format!("# dqmimo {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("# schema: {} v{SCHEMA_VERSION}\n", table.schema));
    out.push_str(&format!("# seed: {}\n", meta.seed));
    out.push_str(&format!("# config-hash: {}\n", meta.config_hash));
    out.push_str(&format!("# timestamp: {}\n", meta.timestamp));
    out.push_str(&format!("# config: {}\n", meta.config_json));
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn render_json(table: &Table, meta: &Meta) -> Result<String, CliError> {
    let config: serde_json::Value = serde_json::from_str(&meta.config_json)
        .map_err(|e| CliError::config(format!("internal config round-trip: {e}")))?;
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: serde_json::Map<String, serde_json::Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(c, cell)| (c.to_string(), cell.json()))
                .collect();
            serde_json::Value::Object(obj)
        })
        .collect();
    let doc = serde_json::json!({
        "meta": {
            "version": env!("CARGO_PKG_VERSION"),
            "schema": format!("{} v{SCHEMA_VERSION}", table.schema),
            "seed": meta.seed,
            "config_hash": meta.config_hash,
            "timestamp": meta.timestamp,
            "config": config,
        },
        "columns": table.columns,
        "rows": rows,
    });
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::config(format!("cannot serialize output: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Writes the table to `out` (stdout when `None`).
pub fn emit(
    table: &Table,
    meta: &Meta,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let text = match format {
        Format::Csv => render_csv(table, meta),
        Format::Json => render_json(table, meta)?,
    };
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(format!("cannot write stdout: {e}"))),
    }
}

//! Tables written as CSV (one `#` JSON metadata line, a header, rows) or as
//! JSON `{meta, rows}`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{Map, Value};

use crate::args::Format;

#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// A command's result: its table, extra metadata and whether every
/// internal check passed.
#[derive(Debug)]
pub struct Report {
    pub table: Table,
    pub meta: Map<String, Value>,
    pub passed: bool,
}

impl Report {
    pub fn new(table: Table) -> Self {
        Report { table, meta: Map::new(), passed: true }
    }
}

/// JSON number, or `null` for non-finite values.
pub fn num(x: f64) -> Value {
    Value::from(x)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn write_csv<W: Write>(mut w: W, meta: &Value, table: &Table) -> io::Result<()> {
    writeln!(w, "# {meta}")?;
    writeln!(w, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(cell).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()
}

pub fn write_json<W: Write>(mut w: W, meta: &Value, table: &Table) -> io::Result<()> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| Value::Object(table.columns.iter().cloned().zip(r.iter().cloned()).collect()))
        .collect();
    let doc = serde_json::json!({ "meta": meta, "rows": rows });
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()
}

pub fn emit(out: Option<&Path>, format: Format, meta: &Value, table: &Table) -> Result<()> {
    let write = |w: &mut dyn Write| match format {
        Format::Csv => write_csv(w, meta, table),
        Format::Json => write_json(w, meta, table),
    };
    match out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write(&mut BufWriter::new(file)).with_context(|| format!("cannot write {}", path.display()))
        }
        None => write(&mut io::stdout().lock()).context("cannot write to stdout"),
    }
}

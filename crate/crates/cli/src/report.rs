//! Tabular reports written as JSON or long-format CSV.
//!
//! Every command fills named tables of rows; both output formats are
//! rendered from the same rounded cells so they carry identical numbers.

use std::io::Write;

use anyhow::Result;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Null,
}

/// Rounds to six significant digits; non-finite values become null.
pub fn num(x: f64) -> Cell {
    if !x.is_finite() {
        return Cell::Null;
    }
    Cell::Num(format!("{x:.5e}").parse().expect("formatted float parses"))
}

pub fn opt(x: Option<f64>) -> Cell {
    x.map_or(Cell::Null, num)
}

pub fn text(s: impl Into<String>) -> Cell {
    Cell::Text(s.into())
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => Value::from(*x),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Null => Value::Null,
        }
    }

    fn to_csv(&self) -> String {
        match self {
            // same digits as the JSON writer
            Cell::Num(x) => serde_json::to_string(x).expect("finite float"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Null => String::new(),
        }
    }
}

pub type Row = Vec<(&'static str, Cell)>;

#[derive(Debug, Default)]
pub struct Table {
    pub name: &'static str,
    pub rows: Vec<Row>,
}

#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub seed: u64,
    pub tables: Vec<Table>,
    pub errors: Vec<Row>,
}

impl Report {
    pub fn new(command: &'static str, seed: u64, names: &[&'static str]) -> Self {
        Self {
            command,
            seed,
            tables: names.iter().map(|n| Table { name: n, rows: Vec::new() }).collect(),
            errors: Vec::new(),
        }
    }

    pub fn push(&mut self, table: &str, row: Row) {
        let t = self
            .tables
            .iter_mut()
            .find(|t| t.name == table)
            .unwrap_or_else(|| panic!("unknown table {table}"));
        t.rows.push(row);
    }

    /// Records a failure of one input record without stopping the run.
    pub fn record_error(&mut self, line_id: &str, err: &dyn std::fmt::Display) {
        self.errors.push(vec![("line_id", text(line_id)), ("message", text(err.to_string()))]);
    }

    fn all_tables(&self) -> impl Iterator<Item = (&str, &Vec<Row>)> {
        self.tables
            .iter()
            .map(|t| (t.name, &t.rows))
            .chain(std::iter::once(("errors", &self.errors)))
    }

    pub fn to_json(&self) -> Value {
        let mut tables = Map::new();
        for (name, rows) in self.all_tables() {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| Value::Object(r.iter().map(|(k, c)| (k.to_string(), c.to_json())).collect()))
                .collect();
            tables.insert(name.to_string(), Value::Array(rows));
        }
        let mut top = Map::new();
        top.insert("schema_version".into(), SCHEMA_VERSION.into());
        top.insert("command".into(), self.command.into());
        top.insert("seed".into(), self.seed.into());
        top.insert("tables".into(), Value::Object(tables));
        Value::Object(top)
    }

    pub fn write_json(&self, out: &mut dyn Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut *out, &self.to_json())?;
        writeln!(out)?;
        Ok(())
    }

    /// One line per cell: `table,row,field,value`.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["table", "row", "field", "value"])?;
        for (name, rows) in self.all_tables() {
            for (i, row) in rows.iter().enumerate() {
                let i = i.to_string();
                for (k, c) in row {
                    w.write_record([name, i.as_str(), k, c.to_csv().as_str()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

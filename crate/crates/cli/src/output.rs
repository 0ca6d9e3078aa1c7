//! Tabular output as CSV or JSON.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::ValueEnum;
use serde_json::{Map, Value};

use crate::fmt::{sig, sig_padded};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Where and how results are written.
#[derive(Debug, Clone)]
pub struct OutputSpec {
    pub format: Format,
    pub precision: usize,
    pub destination: Option<PathBuf>,
}

impl OutputSpec {
    pub fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.destination {
            Some(path) => Box::new(io::BufWriter::new(File::create(path)?)),
            None => Box::new(io::stdout().lock()),
        })
    }

    pub fn emit_table(&self, table: &Table) -> io::Result<()> {
        let mut out = self.writer()?;
        match self.format {
            Format::Csv => table.write_csv(&mut out, self.precision)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &table.to_json(self.precision))?;
                writeln!(out)?;
            }
        }
        out.flush()
    }

    pub fn emit_json(&self, value: &Value) -> io::Result<()> {
        let mut out = self.writer()?;
        serde_json::to_writer_pretty(&mut out, value)?;
        writeln!(out)?;
        out.flush()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Printed to the requested number of significant digits.
    Num(f64),
    /// Printed to a fixed number of significant digits, trailing zeros kept.
    Fixed(f64, usize),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self, precision: usize) -> String {
        match self {
            Cell::Num(v) => sig(*v, precision),
            Cell::Fixed(v, d) => sig_padded(*v, *d),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self, precision: usize) -> Value {
        match self {
            Cell::Num(v) | Cell::Fixed(v, _) if !v.is_finite() => Value::Null,
            Cell::Num(_) | Cell::Fixed(..) => {
                let v: f64 = self.render(precision).parse().expect("formatted float");
                Value::from(v)
            }
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Empty => Value::Null,
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
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Rows under a fixed header.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(columns: I) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W, precision: usize) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render(precision)))?;
        }
        w.flush()
    }

    /// An array of objects keyed by column name, in column order.
    pub fn to_json(&self, precision: usize) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, c)| (k.clone(), c.json(precision)))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

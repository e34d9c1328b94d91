//! Tabular output.
//!
//! Column schemas:
//!
//! | table        | columns                          |
//! |--------------|----------------------------------|
//! | rank trace   | `n,rank`                         |
//! | decay trace  | `n,re,im,abs,cesaro`             |
//! | distribution | `word,probability`               |
//! | gap report   | `n,position`                     |
//!
//! Floats are written with Rust's round-trip formatting (`.` decimal point,
//! exponent notation for very large or small magnitudes). JSON output is an
//! array of objects keyed by column name.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::OutputFormat;
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::Float(v) => serde_json::Value::from(*v),
            Cell::Text(s) => serde_json::Value::from(s.as_str()),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, format: OutputFormat, w: W) -> CliResult<()> {
        match format {
            OutputFormat::Csv => {
                let mut out = csv::Writer::from_writer(w);
                out.write_record(&self.columns)?;
                for row in &self.rows {
                    out.write_record(row.iter().map(Cell::to_csv))?;
                }
                out.flush()?;
            }
            OutputFormat::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: serde_json::Map<String, serde_json::Value> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| (c.to_string(), v.to_json()))
                            .collect();
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                let mut w = w;
                serde_json::to_writer_pretty(&mut w, &rows)?;
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Writes to `path`, or to standard output when no path is given.
    pub fn emit(&self, format: OutputFormat, path: Option<&Path>) -> CliResult<()> {
        match path {
            Some(p) => {
                let file = File::create(p)?;
                let mut w = BufWriter::new(file);
                self.write_to(format, &mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = io::stdout();
                self.write_to(format, stdout.lock())?;
            }
        }
        Ok(())
    }
}

/// `out.csv` becomes `out.<tag>.csv`.
pub fn sibling_path(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

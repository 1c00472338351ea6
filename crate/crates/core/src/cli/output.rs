use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{CliError, Format};
use crate::credit::fmt17;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt17(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map(Value::Number).unwrap_or(Value::Null),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

/// Writes result files into the output directory in the requested format.
#[derive(Debug, Clone)]
pub struct Output {
    dir: PathBuf,
    format: Format,
    written: Vec<PathBuf>,
}

fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

impl Output {
    pub fn new(dir: PathBuf, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        Ok(Output { dir, format, written: Vec::new() })
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write(&mut self, file: &str, content: &str) -> Result<(), CliError> {
        let path = self.dir.join(file);
        fs::write(&path, content).map_err(|e| io_error(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// A table as `name.csv` or as `name.json` holding one object per row.
    pub fn table(&mut self, name: &str, headers: &[&str], rows: &[Vec<Cell>]) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                let mut text = headers.join(",");
                text.push('\n');
                for row in rows {
                    text.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                    text.push('\n');
                }
                self.write(&format!("{name}.csv"), &text)
            }
            Format::Json => {
                let objects: Vec<Value> = rows
                    .iter()
                    .map(|row| {
                        let m: Map<String, Value> =
                            headers.iter().zip(row).map(|(h, c)| (h.to_string(), c.json())).collect();
                        Value::Object(m)
                    })
                    .collect();
                self.json(name, &objects)
            }
        }
    }

    /// Raw CSV text, or the given JSON value when JSON was requested.
    pub fn csv_or_json(&mut self, name: &str, csv: &str, json: &impl Serialize) -> Result<(), CliError> {
        match self.format {
            Format::Csv => self.write(&format!("{name}.csv"), csv),
            Format::Json => self.json(name, json),
        }
    }

    /// Always JSON, whatever the table format.
    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
        text.push('\n');
        self.write(&format!("{name}.json"), &text)
    }

    pub fn text(&mut self, file: &str, content: &str) -> Result<(), CliError> {
        self.write(file, content)
    }
}

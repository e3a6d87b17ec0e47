//! Tabular output in the three machine formats.

use std::io::{self, Write};

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned columns for reading.
    Table,
    /// Comma-separated with a header row.
    Csv,
    /// One JSON object per row.
    JsonLines,
}

pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

fn plain(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Table => {
                let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(plain).collect()).collect();
                let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
                for row in &cells {
                    for (w, c) in widths.iter_mut().zip(row) {
                        *w = (*w).max(c.chars().count());
                    }
                }
                let line = |items: Vec<&str>| {
                    let mut s = String::new();
                    for (i, (item, w)) in items.iter().zip(&widths).enumerate() {
                        if i + 1 == items.len() {
                            s.push_str(item);
                        } else {
                            s.push_str(&format!("{item:<w$}  "));
                        }
                    }
                    s.trim_end().to_string()
                };
                writeln!(out, "{}", line(self.columns.clone()))?;
                for row in &cells {
                    writeln!(out, "{}", line(row.iter().map(String::as_str).collect()))?;
                }
            }
            Format::Csv => {
                writeln!(out, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let fields: Vec<String> = row.iter().map(|v| csv_field(&plain(v))).collect();
                    writeln!(out, "{}", fields.join(","))?;
                }
            }
            Format::JsonLines => {
                for row in &self.rows {
                    let obj: Map<String, Value> =
                        self.columns.iter().map(|c| c.to_string()).zip(row.iter().cloned()).collect();
                    writeln!(out, "{}", Value::Object(obj))?;
                }
            }
        }
        Ok(())
    }
}

//! Versioned CSV tables.
//!
//! Every table starts with a `# hrsim csv v1 <name>` comment line and a
//! header row. Floats are written as `{:.16e}`, which round-trips an f64
//! exactly.

use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

pub const VERSION: &str = "v1";

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Flag(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:.16e}"),
            Value::Text(s) => f.write_str(s),
            Value::Flag(b) => f.write_str(if *b { "1" } else { "0" }),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<u64> for Value {
    fn from(i: u64) -> Self {
        Value::Int(i as i64)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Flag(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl CsvTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        CsvTable {
            name: name.to_owned(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Panics if the row width differs from the header.
    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric column by name; text cells become NaN.
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[k] {
                    Value::Float(x) => *x,
                    Value::Int(i) => *i as f64,
                    Value::Flag(b) => f64::from(u8::from(*b)),
                    Value::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }

    pub fn render(&self) -> String {
        let mut out = format!("# hrsim csv {VERSION} {}\n", self.name).into_bytes();
        let mut w = ::csv::Writer::from_writer(&mut out);
        let write = |w: &mut ::csv::Writer<&mut Vec<u8>>| -> ::csv::Result<()> {
            w.write_record(&self.columns)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Value::to_string))?;
            }
            w.flush()?;
            Ok(())
        };
        write(&mut w).expect("writing to memory");
        drop(w);
        String::from_utf8(out).expect("csv output is utf-8")
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.render().as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    /// Parses a rendered table. Cells that parse as integers or floats
    /// come back numeric, everything else as text.
    pub fn parse(text: &str) -> Result<Self> {
        let (head, body) = text.split_once('\n').ok_or_else(|| Error::Parse("empty csv".into()))?;
        let name = head
            .strip_prefix(&format!("# hrsim csv {VERSION} "))
            .ok_or_else(|| Error::Parse(format!("missing `# hrsim csv {VERSION}` header line")))?;
        let mut r = ::csv::Reader::from_reader(body.as_bytes());
        let columns: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
        let mut table = CsvTable {
            name: name.to_owned(),
            columns,
            rows: Vec::new(),
        };
        for record in r.records() {
            let record = record.map_err(csv_error)?;
            table.rows.push(
                record
                    .iter()
                    .map(|c| {
                        if let Ok(i) = c.parse::<i64>() {
                            Value::Int(i)
                        } else if let Ok(x) = c.parse::<f64>() {
                            Value::Float(x)
                        } else {
                            Value::Text(c.to_owned())
                        }
                    })
                    .collect(),
            );
        }
        Ok(table)
    }
}

fn csv_error(e: ::csv::Error) -> Error {
    Error::Parse(e.to_string())
}

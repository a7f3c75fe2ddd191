//! Number formatting and JSON/CSV emission.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::CliError;

/// Rounds to 12 significant digits; the shortest round-trip form of the
/// result is what gets printed.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Rounds every float in a JSON tree. Non-finite values become null.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            Number::from_f64(round12(n.as_f64().expect("f64 number"))).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

/// A float as a JSON value, rounded; ±∞ and NaN map to null.
pub fn num(x: f64) -> Value {
    Number::from_f64(round12(x)).map_or(Value::Null, Value::Number)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Shortest text for a rounded float, used in CSV cells.
pub fn cell(x: f64) -> String {
    let r = round12(x);
    if r.is_finite() {
        // serde_json's float printer gives the shortest round-trip form.
        serde_json::to_string(&Number::from_f64(r).expect("finite")).expect("serializable")
    } else {
        r.to_string()
    }
}

/// Output sink: a file when `--out` is given, stdout otherwise.
pub fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(p) => File::create(p)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", p.display()))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

pub fn write_json(out: Option<&Path>, v: Value) -> Result<(), CliError> {
    let mut w = sink(out)?;
    let text = serde_json::to_string(&round_json(v)).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(w, "{text}").and_then(|_| w.flush()).map_err(|e| CliError::Internal(e.to_string()))
}

/// A table emitted as CSV or as a JSON array of row objects.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, out: Option<&Path>) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(sink(out)?);
        let internal = |e: csv::Error| CliError::Internal(e.to_string());
        w.write_record(&self.header).map_err(internal)?;
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Value::Number(n) if n.is_f64() => cell(n.as_f64().expect("f64 number")),
                    Value::String(s) => s.clone(),
                    Value::Bool(b) => (*b as u8).to_string(),
                    Value::Number(n) => n.to_string(),
                    Value::Null => String::new(),
                    other => other.to_string(),
                })
                .collect();
            w.write_record(&cells).map_err(internal)?;
        }
        w.flush().map_err(|e| CliError::Internal(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let o: Map<String, Value> = self.header.iter().cloned().zip(r.iter().cloned()).collect();
                    Value::Object(o)
                })
                .collect(),
        )
    }
}

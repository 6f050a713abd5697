use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::config::num;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Int(usize),
    Real(f64),
}

impl Cell {
    fn render(&self) -> String {
        match *self {
            Cell::Int(n) => n.to_string(),
            Cell::Real(x) => num(x),
        }
    }
}

/// A CSV table with a `# key = value` header. Rendering is deterministic.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(metadata: Vec<(String, String)>, columns: &[&str]) -> Self {
        Self {
            metadata,
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_real(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| Cell::Real(x)).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[k] {
                    Cell::Int(n) => n as f64,
                    Cell::Real(x) => x,
                })
                .collect(),
        )
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k} = {v}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "# note: {n}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::render).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn metadata_json(metadata: &[(String, String)]) -> Value {
    let mut m = Map::new();
    for (k, v) in metadata {
        m.insert(k.clone(), Value::String(v.clone()));
    }
    Value::Object(m)
}

pub fn to_json<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Io(e.to_string()))
}

/// Writes to `path` when given, otherwise to `out`.
pub fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

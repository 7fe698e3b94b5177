//! Command results and their three renderings: an aligned text table, CSV,
//! and a TOML result file that can be read back and revalidated.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::{Command, FunctionSpec};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format!("{x:?}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalar {
    pub name: String,
    pub value: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Command,
    pub mean_function: FunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    #[serde(default)]
    pub values: Vec<Scalar>,
    #[serde(default)]
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: Command, mean_function: FunctionSpec) -> Self {
        Self {
            command,
            mean_function,
            seed: None,
            passed: None,
            values: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn value(&mut self, name: &str, value: impl Into<Cell>) -> &mut Self {
        self.values.push(Scalar {
            name: name.to_string(),
            value: value.into(),
        });
        self
    }

    pub fn get(&self, name: &str) -> Option<&Cell> {
        self.values
            .iter()
            .find(|s| s.name == name)
            .map(|s| &s.value)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Parses a result file and checks it is internally consistent.
    pub fn from_toml(text: &str) -> Result<Self> {
        let report: Report =
            toml::from_str(text).map_err(|e| CliError::InvalidResult(e.to_string()))?;
        report.validate()?;
        Ok(report)
    }

    pub fn validate(&self) -> Result<()> {
        self.mean_function
            .resolve()
            .map_err(|e| CliError::InvalidResult(e.to_string()))?;
        for t in &self.tables {
            if let Some(r) = t.rows.iter().position(|r| r.len() != t.columns.len()) {
                return Err(CliError::InvalidResult(format!(
                    "table `{}` row {r} has {} cells for {} columns",
                    t.name,
                    t.rows[r].len(),
                    t.columns.len()
                )));
            }
        }
        let mut names: Vec<&str> = self.values.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::InvalidResult(format!(
                "duplicate value `{}`",
                w[0]
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let f = &self.mean_function;
        let params: Vec<String> = f.params.iter().map(|p| format!("{p:?}")).collect();
        let _ = if params.is_empty() {
            writeln!(out, "{}  f = {}", self.command.as_str(), f.name)
        } else {
            writeln!(
                out,
                "{}  f = {}({})",
                self.command.as_str(),
                f.name,
                params.join(", ")
            )
        };
        if let Some(passed) = self.passed {
            let _ = writeln!(out, "{}", if passed { "PASS" } else { "FAIL" });
        }
        if !self.values.is_empty() {
            let rows: Vec<Vec<String>> = self
                .values
                .iter()
                .map(|s| vec![s.name.clone(), s.value.render()])
                .collect();
            out.push_str(&align(&[], &rows));
        }
        for t in &self.tables {
            let _ = writeln!(out, "\n[{}]", t.name);
            let rows: Vec<Vec<String>> = t
                .rows
                .iter()
                .map(|r| r.iter().map(Cell::render).collect())
                .collect();
            out.push_str(&align(&t.columns, &rows));
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut blocks = Vec::new();
        if !self.values.is_empty() {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "value"])?;
            for s in &self.values {
                w.write_record([s.name.as_str(), &s.value.render()])?;
            }
            blocks.push(finish(w)?);
        }
        for t in &self.tables {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&t.columns)?;
            for r in &t.rows {
                w.write_record(r.iter().map(Cell::render))?;
            }
            blocks.push(finish(w)?);
        }
        Ok(blocks.join("\n"))
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::InvalidResult(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn align(header: &[String], rows: &[Vec<String>]) -> String {
    let n = header
        .len()
        .max(rows.iter().map(Vec::len).max().unwrap_or(0));
    let mut widths = vec![0; n];
    for r in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for r in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        if r.is_empty() {
            continue;
        }
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

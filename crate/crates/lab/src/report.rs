//! CSV reports with a fixed column schema.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use catest_core::{Arith, Prob};
use thiserror::Error;

use crate::syntax::{parse_rational, render_prob};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("row {row}: {detail}")]
    SchemaMismatch { row: usize, detail: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    Prob,
    Text,
    Bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Prob(Prob),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn kind(&self) -> Option<Kind> {
        Some(match self {
            Cell::Int(_) => Kind::Int,
            Cell::Float(_) => Kind::Float,
            Cell::Prob(_) => Kind::Prob,
            Cell::Text(_) => Kind::Text,
            Cell::Bool(_) => Kind::Bool,
            Cell::Empty => return None,
        })
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Prob(p) => render_prob(p),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Prob> for Cell {
    fn from(p: Prob) -> Self {
        Cell::Prob(p)
    }
}

impl From<&Prob> for Cell {
    fn from(p: &Prob) -> Self {
        Cell::Prob(p.clone())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub columns: Vec<(&'static str, Kind)>,
}

impl Schema {
    pub fn new(columns: &[(&'static str, Kind)]) -> Self {
        Self {
            columns: columns.to_vec(),
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.columns.iter().map(|(n, _)| *n).collect()
    }
}

fn check(rows: &[Vec<Cell>], schema: &Schema) -> Result<(), ReportError> {
    for (i, row) in rows.iter().enumerate() {
        if row.len() != schema.columns.len() {
            return Err(ReportError::SchemaMismatch {
                row: i,
                detail: format!("{} cells for {} columns", row.len(), schema.columns.len()),
            });
        }
        for (cell, (name, kind)) in row.iter().zip(&schema.columns) {
            if let Some(k) = cell.kind() {
                if k != *kind {
                    return Err(ReportError::SchemaMismatch {
                        row: i,
                        detail: format!("column `{name}` wants {kind:?}, got {k:?}"),
                    });
                }
            }
        }
    }
    Ok(())
}

/// CSV text with a header row.
pub fn emit_report(rows: &[Vec<Cell>], schema: &Schema) -> Result<String, ReportError> {
    check(rows, schema)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(schema.names())?;
    for row in rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("cells are utf-8"))
}

fn parse_cell(text: &str, kind: Kind, row: usize) -> Result<Cell, ReportError> {
    if text.is_empty() && kind != Kind::Text {
        return Ok(Cell::Empty);
    }
    let bad = || ReportError::SchemaMismatch {
        row,
        detail: format!("`{text}` is not {kind:?}"),
    };
    Ok(match kind {
        Kind::Int => Cell::Int(text.parse().map_err(|_| bad())?),
        Kind::Float => Cell::Float(text.parse().map_err(|_| bad())?),
        Kind::Bool => Cell::Bool(text.parse().map_err(|_| bad())?),
        Kind::Text => Cell::Text(text.into()),
        Kind::Prob => {
            // exact values are written as integers or p/q, floats with a point
            let exact = !text.contains(['.', 'e', 'E']);
            let r = parse_rational(text).map_err(|_| bad())?;
            let p = Prob::from_rational(r, Arith::Exact).ok_or_else(bad)?;
            Cell::Prob(if exact { p } else { p.to_mode(Arith::Approx) })
        }
    })
}

/// Reads text written by [`emit_report`]; lines starting with `#` are skipped.
pub fn parse_report(text: &str, schema: &Schema) -> Result<Vec<Vec<Cell>>, ReportError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != schema.names() {
        return Err(ReportError::SchemaMismatch {
            row: 0,
            detail: format!("header {header:?}"),
        });
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            rec.iter()
                .zip(&schema.columns)
                .map(|(t, (_, k))| parse_cell(t, *k, i))
                .collect()
        })
        .collect()
}

/// A finished experiment: its table, summary lines and whether every
/// certified bound held.
#[derive(Clone, Debug)]
pub struct Report {
    pub name: String,
    pub schema: Schema,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<String>,
    pub held: bool,
}

impl Report {
    pub fn new(name: &str, schema: Schema) -> Self {
        Self {
            name: name.into(),
            schema,
            rows: Vec::new(),
            summary: Vec::new(),
            held: true,
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        self.rows.push(cells);
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn csv(&self) -> Result<String, ReportError> {
        emit_report(&self.rows, &self.schema)
    }

    /// Writes `<name>.csv` (prefixed by the resolved config as `#` lines)
    /// and `<name>.txt`, returning both paths.
    pub fn write(&self, dir: &Path, config: &str) -> Result<(PathBuf, PathBuf), ReportError> {
        fs::create_dir_all(dir)?;
        let mut csv_text = String::new();
        for line in config.lines() {
            let _ = writeln!(csv_text, "# {line}");
        }
        csv_text.push_str(&self.csv()?);
        let csv_path = dir.join(format!("{}.csv", self.name));
        fs::write(&csv_path, csv_text)?;
        let mut txt = String::new();
        let _ = writeln!(txt, "experiment: {}", self.name);
        let _ = writeln!(txt, "bounds held: {}", self.held);
        for line in &self.summary {
            let _ = writeln!(txt, "{line}");
        }
        let _ = writeln!(txt, "\nresolved config:\n{config}");
        let txt_path = dir.join(format!("{}.txt", self.name));
        fs::write(&txt_path, txt)?;
        Ok((csv_path, txt_path))
    }
}

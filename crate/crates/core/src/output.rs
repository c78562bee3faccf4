//! Versioned CSV and JSON tables.
//!
//! CSV starts with a `# overlatt v<version>` comment line, keeps a fixed
//! column order and writes reals with 17 significant digits. JSON carries the
//! version under `"version"` and one object per row.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::measures::MeasureReport;
use crate::quality::QualityResult;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Parse {
                kind: "format",
                value: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Real(x) => format_real(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Real)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// `{:.16e}` with a fixed `e±XX` exponent; non-finite values spelled out.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.16e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = out;
        writeln!(out, "# overlatt v{VERSION}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        json!({ "version": VERSION, "columns": self.columns, "rows": rows })
    }

    pub fn write<W: Write>(&self, format: Format, mut out: W) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.to_json())?;
                writeln!(out)
            }
        }
    }
}

pub const QUALITY_COLUMNS: [&str; 8] = ["delta", "omega", "r", "density", "union", "overlap", "mode", "measure"];

pub fn quality_row(q: &QualityResult) -> Vec<Cell> {
    vec![
        q.delta.into(),
        q.omega.into(),
        q.r.into(),
        q.density.into(),
        q.union.into(),
        q.overlap.into(),
        q.mode.as_str().into(),
        q.measure.into(),
    ]
}

pub fn quality_table(rows: &[QualityResult]) -> Table {
    let mut t = Table::new(QUALITY_COLUMNS.to_vec());
    for q in rows {
        t.push(quality_row(q));
    }
    t
}

pub fn measure_table(rows: &[MeasureReport]) -> Table {
    let oracle = rows.iter().any(|r| r.oracle.is_some());
    let mut columns = vec![
        "n", "delta", "r", "density", "union", "dist_overlap", "vol_overlap", "free_space", "exact",
    ];
    if oracle {
        columns.extend(["mc_union", "mc_std_error", "samples", "seed"]);
    }
    let mut t = Table::new(columns);
    for m in rows {
        let mut row = vec![
            Cell::Int(m.n as i64),
            m.delta.into(),
            m.r.into(),
            m.density.into(),
            m.union.into(),
            m.dist_overlap.into(),
            m.vol_overlap.into(),
            m.free_space.into(),
            Cell::Bool(m.exact),
        ];
        if oracle {
            match &m.oracle {
                Some(e) => row.extend([
                    e.mean.into(),
                    e.std_error.into(),
                    Cell::Int(e.samples as i64),
                    Cell::Text(e.seed.to_string()),
                ]),
                None => row.extend([Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing]),
            }
        }
        t.push(row);
    }
    t
}

//! Table assembly and the CSV / JSON writers.
//!
//! Every numeric cell is printed with 17 significant digits so it parses
//! back to the identical double.  CSV follows RFC 4180 quoting; JSON is an
//! array of flat objects whose keys mirror the CSV columns.  Non-finite
//! values appear as `inf` / `NaN` in CSV and as `null` in JSON.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::I(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }
}

/// 17 significant digits; round-trips any finite double exactly.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cell_csv(cell: &Cell) -> String {
    match cell {
        Cell::F(x) => {
            if x.is_finite() {
                fmt17(*x)
            } else if x.is_nan() {
                "NaN".to_string()
            } else if *x > 0.0 {
                "inf".to_string()
            } else {
                "-inf".to_string()
            }
        }
        Cell::I(i) => i.to_string(),
        Cell::S(s) => csv_quote(s),
        Cell::B(b) => b.to_string(),
    }
}

pub fn to_csv(table: &Table) -> String {
    let mut out = String::new();
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(cell_csv).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

fn cell_json(cell: &Cell) -> String {
    match cell {
        Cell::F(x) => {
            if x.is_finite() {
                fmt17(*x)
            } else {
                "null".to_string()
            }
        }
        Cell::I(i) => i.to_string(),
        Cell::S(s) => format!("\"{}\"", json_escape(s)),
        Cell::B(b) => b.to_string(),
    }
}

pub fn to_json(table: &Table) -> String {
    let mut out = String::from("[\n");
    for (i, row) in table.rows.iter().enumerate() {
        out.push_str("  {");
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "\"{}\": {}", table.columns[j], cell_json(cell));
        }
        out.push('}');
        if i + 1 < table.rows.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]\n");
    out
}

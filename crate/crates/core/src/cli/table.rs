//! Row-oriented result tables and their CSV form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::{SlotOutcome, SweepRow, WindowRow};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(i) => Some(i as f64),
            Cell::Num(x) => Some(x),
            Cell::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_sig9(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Formats `x` with nine significant digits. Magnitudes in `[1e-4, 1e9)`
/// are written positionally, everything else in `d.dddddddde±x` form.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            digits.clone()
        } else {
            format!("{}.{}", &digits[..point], &digits[point..])
        }
    };
    format!("{sign}{body}")
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        ResultTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    /// Reads a table back from CSV text. Cells that parse as unsigned
    /// integers become `Int`, other numbers `Num`, anything else `Text`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Schema("empty CSV".into()))?;
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let cells: Vec<Cell> = line
                .split(',')
                .map(|c| {
                    if let Ok(i) = c.parse::<u64>() {
                        Cell::Int(i)
                    } else if let Ok(x) = c.parse::<f64>() {
                        Cell::Num(x)
                    } else {
                        Cell::Text(c.to_string())
                    }
                })
                .collect();
            if cells.len() != columns.len() {
                return Err(Error::Schema(format!(
                    "row {} has {} cells, header has {}",
                    i + 1,
                    cells.len(),
                    columns.len()
                )));
            }
            rows.push(cells);
        }
        Ok(ResultTable { columns, rows })
    }
}

/// Writes `table` as CSV. Empty tables are rejected.
pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::Schema("refusing to write an empty table".into()));
    }
    fs::write(path, table.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn scenario1_table(rows: &[SweepRow]) -> ResultTable {
    let mut t = ResultTable::new(&[
        "distance_m",
        "mean_secrecy_rate",
        "mean_p_j_mw",
        "mean_alpha_beta",
    ]);
    for r in rows {
        t.push(vec![
            Cell::Num(r.distance_m),
            Cell::Num(r.mean_secrecy_rate),
            Cell::Num(r.mean_p_j_mw),
            Cell::Num(r.mean_alpha_beta),
        ]);
    }
    t
}

pub fn scenario2_table(rows: &[WindowRow]) -> ResultTable {
    let mut t = ResultTable::new(&["window_end_slot", "policy", "p_unreliable"]);
    for r in rows {
        t.push(vec![
            Cell::Int(r.window_end_slot as u64),
            Cell::Text(r.policy.to_string()),
            Cell::Num(r.p_unreliable),
        ]);
    }
    t
}

/// Long-format reputation trajectory: one row per (slot, SU).
pub fn reputation_table(trace: &[SlotOutcome], selfish: &[bool]) -> ResultTable {
    let mut t = ResultTable::new(&["slot", "su_id", "selfish", "reputation"]);
    for o in trace {
        for (id, &r) in o.reputations.iter().enumerate() {
            t.push(vec![
                Cell::Int(o.slot as u64),
                Cell::Int(id as u64),
                Cell::Int(u64::from(selfish[id])),
                Cell::Num(r),
            ]);
        }
    }
    t
}

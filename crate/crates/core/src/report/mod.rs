//! Benchmark suites rendered as tables beside published reference values.
//!
//! Each measured cell may carry a reference (looked up by table, row label
//! and metric) and a limit. A report fails when any limited cell is out of
//! bounds.

mod reference;
mod suites;

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

pub use reference::{round_sig, Reference, ReferenceError, References, BUILTIN};
pub use suites::{run, BenchSpec, Suite};

use crate::workloads::WorkloadError;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Format, ReportError> {
        match s {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(ReportError::Usage(format!("unknown format {s:?} (csv or markdown)"))),
        }
    }
}

/// Acceptance bound for one cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Limit {
    Exact(f64),
    /// Within this many percent of the reference.
    RelRef(f64),
    /// Within this many points of a percentage reference.
    PointsRef(f64),
    /// Reads as the reference when rounded to its printed precision.
    RoundedRef,
    AtLeast(f64),
    AtMost(f64),
    Range(f64, f64),
}

impl Limit {
    fn check(&self, x: f64, reference: Option<&Reference>) -> bool {
        let with_ref = |f: &dyn Fn(&Reference) -> bool| reference.is_some_and(f);
        match *self {
            Limit::Exact(v) => x == v,
            Limit::RelRef(pct) => with_ref(&|r| r.delta_pct(x).abs() <= pct),
            Limit::PointsRef(pts) => with_ref(&|r| (x - r.value).abs() <= pts),
            Limit::RoundedRef => with_ref(&|r| r.matches_rounded(x)),
            Limit::AtLeast(v) => x >= v,
            Limit::AtMost(v) => x <= v,
            Limit::Range(lo, hi) => (lo..=hi).contains(&x),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub value: f64,
    pub text: String,
    pub reference: Option<Reference>,
    pub limit: Option<Limit>,
}

impl Cell {
    pub fn int(v: u64) -> Cell {
        Cell { value: v as f64, text: v.to_string(), reference: None, limit: None }
    }

    pub fn float(v: f64, decimals: usize) -> Cell {
        Cell { value: v, text: format!("{v:.decimals$}"), reference: None, limit: None }
    }

    pub fn sci(v: f64) -> Cell {
        Cell { value: v, text: format!("{v:.3e}"), reference: None, limit: None }
    }

    pub fn flag(b: bool) -> Cell {
        Cell { value: b as u8 as f64, text: b.to_string(), reference: None, limit: None }
    }

    pub fn limit(mut self, l: Limit) -> Cell {
        self.limit = Some(l);
        self
    }

    pub fn limit_if(self, cond: bool, l: Limit) -> Cell {
        if cond {
            self.limit(l)
        } else {
            self
        }
    }

    /// `None` when the cell has no limit.
    pub fn passed(&self) -> Option<bool> {
        self.limit.as_ref().map(|l| l.check(self.value, self.reference.as_ref()))
    }

    pub fn delta_pct(&self) -> Option<f64> {
        self.reference.as_ref().map(|r| r.delta_pct(self.value))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub label: String,
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub id: &'static str,
    pub title: String,
    pub key: &'static str,
    pub metrics: Vec<&'static str>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(id: &'static str, title: &str, key: &'static str, metrics: &[&'static str]) -> Table {
        Table { id, title: title.to_string(), key, metrics: metrics.to_vec(), rows: Vec::new() }
    }

    /// Append a row. Cells without a reference of their own pick one up
    /// from `refs` by table, label and metric.
    pub fn push(&mut self, refs: &References, label: String, mut cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.metrics.len(), "one cell per metric");
        for (cell, metric) in cells.iter_mut().zip(&self.metrics) {
            if cell.reference.is_none() {
                cell.reference = refs.get(self.id, &label, metric).cloned();
            }
        }
        self.rows.push(Row { label, cells });
    }

    pub fn cell(&self, row: &str, metric: &str) -> Option<&Cell> {
        let i = self.metrics.iter().position(|m| *m == metric)?;
        self.rows.iter().find(|r| r.label == row).map(|r| &r.cells[i])
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for row in &self.rows {
            for (cell, metric) in row.cells.iter().zip(&self.metrics) {
                if cell.passed() == Some(false) {
                    out.push(format!("{} / {} / {}: {}", self.id, row.label, metric, cell.text));
                }
            }
        }
        out
    }

    fn has_reference(&self, i: usize) -> bool {
        self.rows.iter().any(|r| r.cells[i].reference.is_some())
    }

    fn has_limits(&self) -> bool {
        self.rows.iter().any(|r| r.cells.iter().any(|c| c.limit.is_some()))
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec![self.key.to_string()];
        for (i, m) in self.metrics.iter().enumerate() {
            h.push(m.to_string());
            if self.has_reference(i) {
                h.push(format!("{m} reference"));
                h.push(format!("{m} delta%"));
            }
        }
        if self.has_limits() {
            h.push("status".to_string());
        }
        h
    }

    fn body(&self, empty: &str) -> Vec<Vec<String>> {
        let refs: Vec<bool> = (0..self.metrics.len()).map(|i| self.has_reference(i)).collect();
        let limits = self.has_limits();
        self.rows
            .iter()
            .map(|row| {
                let mut out = vec![row.label.clone()];
                for (i, c) in row.cells.iter().enumerate() {
                    out.push(c.text.clone());
                    if refs[i] {
                        match (&c.reference, c.delta_pct()) {
                            (Some(r), Some(d)) => {
                                out.push(r.text.clone());
                                out.push(format!("{d:+.1}"));
                            }
                            _ => {
                                out.push(empty.to_string());
                                out.push(empty.to_string());
                            }
                        }
                    }
                }
                if limits {
                    let failed: Vec<&str> = row
                        .cells
                        .iter()
                        .zip(&self.metrics)
                        .filter(|(c, _)| c.passed() == Some(false))
                        .map(|(_, m)| *m)
                        .collect();
                    let checked = row.cells.iter().any(|c| c.limit.is_some());
                    out.push(match (checked, failed.is_empty()) {
                        (false, _) => empty.to_string(),
                        (true, true) => "ok".to_string(),
                        (true, false) => format!("FAIL {}", failed.join(";")),
                    });
                }
                out
            })
            .collect()
    }

    fn render_csv(&self, s: &mut String) {
        let line = |s: &mut String, fields: &[String]| {
            let f: Vec<String> = fields.iter().map(|x| csv_field(x)).collect();
            let _ = writeln!(s, "{}", f.join(","));
        };
        let _ = writeln!(s, "# {}", self.title);
        line(s, &self.header());
        for r in self.body("") {
            line(s, &r);
        }
    }

    fn render_markdown(&self, s: &mut String) {
        let _ = writeln!(s, "### {}\n", self.title);
        let h = self.header();
        let _ = writeln!(s, "| {} |", h.join(" | "));
        let _ = writeln!(s, "|{}", "---|".repeat(h.len()));
        for r in self.body("-") {
            let _ = writeln!(s, "| {} |", r.join(" | "));
        }
    }
}

fn csv_field(x: &str) -> String {
    if x.contains([',', '"', '\n']) {
        format!("\"{}\"", x.replace('"', "\"\""))
    } else {
        x.to_string()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub suite: Suite,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn table(&self, id: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.id == id)
    }

    /// Every limited cell that is out of bounds.
    pub fn failures(&self) -> Vec<String> {
        self.tables.iter().flat_map(|t| t.failures()).collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn render(&self, format: Format) -> String {
        let mut s = String::new();
        for (i, t) in self.tables.iter().enumerate() {
            if i > 0 {
                s.push('\n');
            }
            match format {
                Format::Csv => t.render_csv(&mut s),
                Format::Markdown => t.render_markdown(&mut s),
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn refs() -> References {
        References::parse("[t.a]\nx = \"100\"\n").unwrap()
    }

    #[test]
    fn limits_and_rendering() {
        let mut t = Table::new("t", "Demo", "case", &["x", "y"]);
        t.push(&refs(), "a".into(), vec![Cell::int(110).limit(Limit::RelRef(5.0)), Cell::flag(true)]);
        t.push(&refs(), "b".into(), vec![Cell::int(7), Cell::flag(false).limit(Limit::Exact(0.0))]);
        assert_eq!(t.failures(), vec!["t / a / x: 110".to_string()]);
        let r = Report { suite: Suite::Grid, tables: vec![t] };
        let csv = r.render(Format::Csv);
        assert_eq!(
            csv,
            "# Demo\ncase,x,x reference,x delta%,y,status\na,110,100,+10.0,true,FAIL x\nb,7,,,false,ok\n"
        );
        let md = r.render(Format::Markdown);
        assert!(md.contains("| b | 7 | - | - | false | ok |"));
    }

    #[test]
    fn limit_without_reference_fails() {
        let c = Cell::int(3).limit(Limit::RoundedRef);
        assert_eq!(c.passed(), Some(false));
        assert_eq!(Cell::int(3).passed(), None);
        assert_eq!(csv_field("a,b"), "\"a,b\"");
    }
}

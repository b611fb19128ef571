//! CSV tables, summary checks and the run-summary JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Shortest representation that parses back to the same double.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// One CSV file: provenance comments, a header row and data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub comments: Vec<String>,
    pub header: Vec<String>,
    /// Units, one per column, written as a comment above the header.
    pub units: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            file: file.to_string(),
            comments: Vec::new(),
            header: columns.iter().map(|c| c.0.to_string()).collect(),
            units: columns.iter().map(|c| c.1.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| num(v)).collect());
    }

    pub fn write(&self, dir: &Path, provenance: &[String]) -> Result<(), CliError> {
        let mut out = BufWriter::new(File::create(dir.join(&self.file))?);
        for line in provenance.iter().chain(&self.comments) {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "# units: {}", self.units.join(", "))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Recorded,
}

/// One summary entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(rename = "paper_anchor")]
    pub anchor: String,
    pub value: f64,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    /// How `value` is compared: `abs`, `below`, `above`, `true` or `record`.
    pub relation: &'static str,
    pub status: Status,
}

impl Check {
    fn make(
        name: &str,
        anchor: &str,
        value: f64,
        expected: Option<f64>,
        tolerance: Option<f64>,
        relation: &'static str,
        ok: Option<bool>,
    ) -> Self {
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value,
            expected,
            tolerance,
            relation,
            status: match ok {
                Some(true) => Status::Pass,
                Some(false) => Status::Fail,
                None => Status::Recorded,
            },
        }
    }

    /// `|value - expected| <= tolerance`.
    pub fn near(name: &str, anchor: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        let ok = (value - expected).abs() <= tolerance;
        Self::make(name, anchor, value, Some(expected), Some(tolerance), "abs", Some(ok))
    }

    /// `value < bound`.
    pub fn below(name: &str, anchor: &str, value: f64, bound: f64) -> Self {
        Self::make(name, anchor, value, Some(bound), None, "below", Some(value < bound))
    }

    /// `value > bound`.
    pub fn above(name: &str, anchor: &str, value: f64, bound: f64) -> Self {
        Self::make(name, anchor, value, Some(bound), None, "above", Some(value > bound))
    }

    pub fn holds(name: &str, anchor: &str, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self::make(name, anchor, v, Some(1.0), None, "true", Some(ok))
    }

    pub fn record(name: &str, anchor: &str, value: f64) -> Self {
        Self::make(name, anchor, value, None, None, "record", None)
    }

    pub fn record_against(name: &str, anchor: &str, value: f64, expected: f64) -> Self {
        Self::make(name, anchor, value, Some(expected), None, "record", None)
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub config: &'a ExperimentConfig,
    pub version: &'static str,
    pub experiment: &'static str,
    pub operator: String,
    pub files: Vec<String>,
    pub checks: &'a [Check],
    pub wall_clock_seconds: f64,
}

impl Summary<'_> {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let file = BufWriter::new(File::create(dir.join("summary.json"))?);
        serde_json::to_writer_pretty(file, self).map_err(|e| CliError::Io(e.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e21, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.1), "0.1");
    }

    #[test]
    fn check_status() {
        assert_eq!(Check::near("a", "b", 1.05, 1.0, 0.1).status, Status::Pass);
        assert_eq!(Check::below("a", "b", 2.0, 1.0).status, Status::Fail);
        assert_eq!(Check::record("a", "b", 2.0).status, Status::Recorded);
        assert!(Check::record("a", "b", f64::NAN).passed());
    }

    #[test]
    fn table_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("t.csv", &[("x", "coordinate"), ("u", "solution")]).comment("note");
        t.push_nums(&[0.5, -1.0]);
        t.write(dir.path(), &["fraclap test".into()]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(
            text,
            "# fraclap test\n# note\n# units: coordinate, solution\nx,u\n0.5,-1.0\n"
        );
    }
}

//! Run reports and their CSV/JSON persistence.
//!
//! JSON reports hold no wall-clock data so that the same config and seed
//! reproduce them byte for byte; timings go to a `timing.json` sidecar.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::ExperimentConfig;

/// A rectangular numeric table, the unit of CSV output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::LengthMismatch {
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub values: BTreeMap<String, f64>,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: Option<ExperimentConfig>,
    pub scalars: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    pub tables: BTreeMap<String, Table>,
    pub checks: Vec<CheckOutcome>,
}

impl RunReport {
    pub fn new(name: impl Into<String>, command: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            config: None,
            scalars: BTreeMap::new(),
            flags: BTreeMap::new(),
            tables: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    pub fn scalar(&mut self, key: impl Into<String>, value: f64) {
        self.scalars.insert(key.into(), value);
    }

    pub fn flag(&mut self, key: impl Into<String>, value: bool) {
        self.flags.insert(key.into(), value);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn check_finite(&self) -> Result<()> {
        let finite_scalars = self.scalars.values().all(|v| v.is_finite());
        let finite_tables = self
            .tables
            .values()
            .all(|t| t.rows.iter().flatten().all(|v| v.is_finite()));
        let finite_checks = self
            .checks
            .iter()
            .all(|c| c.values.values().all(|v| v.is_finite()));
        if finite_scalars && finite_tables && finite_checks {
            Ok(())
        } else {
            Err(Error::NonFinite("report contents"))
        }
    }
}

/// CSV with a header row, `.` decimals and `\n` line endings.
pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::io(path, e))?;
    w.write_record(&table.columns).map_err(|e| Error::io(path, e))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format!("{v:?}")))
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, e))?;
    let columns = r
        .headers()
        .map_err(|e| Error::io(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut table = Table {
        columns,
        rows: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::io(path, e))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::io(path, format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        table.push(row)?;
    }
    Ok(table)
}

pub fn write_json(report: &RunReport, path: &Path) -> Result<()> {
    report.check_finite()?;
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::io(path, e))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_json(path: &Path) -> Result<RunReport> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::io(path, e))
}

/// Writes `report.json` plus one `<table>.csv` per table into `dir`.
pub fn write_report_dir(report: &RunReport, dir: &Path, csv: bool, json: bool) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if csv {
        for (name, table) in &report.tables {
            write_csv(table, &dir.join(format!("{name}.csv")))?;
        }
    }
    if json {
        write_json(report, &dir.join("report.json"))?;
    }
    Ok(())
}

pub fn write_timing(dir: &Path, timings: &BTreeMap<String, f64>) -> Result<()> {
    let path = dir.join("timing.json");
    let s = serde_json::to_string_pretty(timings).map_err(|e| Error::io(&path, e))?;
    fs::write(&path, s + "\n").map_err(|e| Error::io(&path, e))
}

/// Plain-text summary of a report.
pub fn render_summary(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} ({} v{})", report.name, report.command, report.version);
    if let Some(seed) = report.seed {
        let _ = writeln!(out, "seed: {seed}");
    }
    let width = report
        .scalars
        .keys()
        .chain(report.flags.keys())
        .map(String::len)
        .max()
        .unwrap_or(0);
    for (k, v) in &report.scalars {
        let _ = writeln!(out, "  {k:<width$}  {v:.6e}");
    }
    for (k, v) in &report.flags {
        let _ = writeln!(out, "  {k:<width$}  {v}");
    }
    for (name, t) in &report.tables {
        let _ = writeln!(out, "table {name}: {} rows x {} columns ({})", t.rows.len(), t.columns.len(), t.columns.join(", "));
    }
    for c in &report.checks {
        let _ = writeln!(out, "{}", c.line());
    }
    out
}

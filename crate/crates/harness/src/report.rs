//! Experiment reports and their CSV / JSON rendering.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::Result;

/// One pass/fail line of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. "<= 0.15".
    pub rule: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, rule: format!("<= {limit}"), passed: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, rule: format!(">= {limit}"), passed: value >= limit }
    }

    pub fn positive(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, rule: "> 0".into(), passed: value > 0.0 }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, rule: format!("in [{lo}, {hi}]"), passed: value >= lo && value <= hi }
    }

    pub fn flag(name: impl Into<String>, passed: bool, rule: impl Into<String>) -> Self {
        Self { name: name.into(), value: if passed { 1.0 } else { 0.0 }, rule: rule.into(), passed }
    }
}

/// A named table; cells are JSON values so that the same rows render as
/// CSV (null becomes an empty field) or JSON records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell))?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let records: Vec<serde_json::Map<String, Value>> =
            self.rows.iter().map(|row| self.columns.iter().cloned().zip(row.iter().cloned()).collect()).collect();
        let mut out = serde_json::to_vec_pretty(&records)?;
        out.push(b'\n');
        Ok(out)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Float cell; non-finite values become null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn opt(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Experiment-specific figures (estimates, CIs, diagnostics).
    pub details: Value,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    pub fn new(
        config: &ExperimentConfig,
        checks: Vec<Check>,
        warnings: Vec<String>,
        details: Value,
        tables: Vec<Table>,
    ) -> Self {
        Self {
            experiment: config.experiment.name().into(),
            config: config.clone(),
            passed: checks.iter().all(|c| c.passed),
            checks,
            warnings,
            details,
            tables,
        }
    }

    /// Writes `<experiment>-<table>.csv|json` for every table and
    /// `<experiment>-summary.json`; returns the written paths.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for t in &self.tables {
            let (ext, bytes) = match format {
                OutputFormat::Csv => ("csv", t.to_csv()?),
                OutputFormat::Json => ("json", t.to_json()?),
            };
            let path = dir.join(format!("{}-{}.{ext}", self.experiment, t.name));
            fs::write(&path, bytes)?;
            paths.push(path);
        }
        let path = dir.join(format!("{}-summary.json", self.experiment));
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        fs::write(&path, bytes)?;
        paths.push(path);
        Ok(paths)
    }

    /// One line per check.
    pub fn render(&self) -> String {
        let mut s = format!("{}: {}\n", self.experiment, if self.passed { "PASS" } else { "FAIL" });
        for c in &self.checks {
            s.push_str(&format!(
                "  [{}] {} = {:.6} ({})\n",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.value,
                c.rule
            ));
        }
        for w in &self.warnings {
            s.push_str(&format!("  warning: {w}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_renders_nulls_as_empty() {
        let mut t = Table::new("t", &["x", "y"]);
        t.push(vec![json!(1.5), Value::Null]);
        t.push(vec![json!(2), json!("a")]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "x,y\n1.5,\n2,a\n");
        assert_eq!(num(f64::NAN), Value::Null);
    }
}

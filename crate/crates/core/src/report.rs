//! Report documents emitted by the command-line tool.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::table::ProbabilityTable;

/// Slack allowed on `[0, 1]` for every probability in a report.
pub const PROBABILITY_SLACK: f64 = 1e-9;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the scenario file bytes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub summary: Vec<String>,
    pub tables: Vec<ProbabilityTable>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub data: serde_json::Value,
    pub pass: bool,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ReportDocument {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            command: command.into(),
            scenario_digest: None,
            seed: None,
            summary: Vec::new(),
            tables: Vec::new(),
            checks: Vec::new(),
            data: serde_json::Value::Null,
            pass: true,
        }
    }

    /// A check passing when `defect <= tolerance`.
    pub fn check(&mut self, name: impl Into<String>, defect: f64, tolerance: f64) -> bool {
        let pass = defect <= tolerance;
        self.checks.push(Check { name: name.into(), defect, tolerance, pass, detail: None });
        self.pass &= pass;
        pass
    }

    pub fn check_with_detail(&mut self, name: impl Into<String>, defect: f64, tolerance: f64, detail: String) -> bool {
        let pass = self.check(name, defect, tolerance);
        self.checks.last_mut().expect("just pushed").detail = Some(detail);
        pass
    }

    /// A yes/no check recorded with defect 0 or 1 and tolerance 0.
    pub fn flag(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) -> bool {
        self.check_with_detail(name, if pass { 0.0 } else { 1.0 }, 0.0, detail.into())
    }

    /// Every table entry lies in `[0, 1]` up to [`PROBABILITY_SLACK`].
    pub fn probabilities_in_range(&self) -> bool {
        self.tables.iter().all(|t| t.entries_in_unit_interval(PROBABILITY_SLACK))
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{} {} {}", self.tool, self.version, self.command);
        if let Some(d) = &self.scenario_digest {
            let _ = write!(out, "  scenario sha256:{}", &d[..16.min(d.len())]);
        }
        if let Some(seed) = self.seed {
            let _ = write!(out, "  seed {seed}");
        }
        out.push('\n');
        for line in &self.summary {
            let _ = writeln!(out, "{line}");
        }
        for table in &self.tables {
            out.push('\n');
            let _ = write!(out, "{} | given {}", table.direction, table.given);
            if let Some(f) = table.factor {
                let _ = write!(out, "  (factor {f:.6})");
            }
            out.push('\n');
            let width = table.labels().map(|l| l.chars().count()).max().unwrap_or(0).max("outcome".len());
            let _ = writeln!(out, "  {:<width$}  probability", "outcome");
            for (label, p) in &table.entries {
                let _ = writeln!(out, "  {label:<width$}  {p:.12}");
            }
        }
        if !self.checks.is_empty() {
            out.push('\n');
            let width = self.checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
            let _ = writeln!(out, "  {:<width$}  {:>10}  {:>10}  result", "check", "defect", "tolerance");
            for c in &self.checks {
                let verdict = if c.pass { "PASS" } else { "FAIL" };
                let _ = write!(out, "  {:<width$}  {:>10.3e}  {:>10.3e}  {verdict}", c.name, c.defect, c.tolerance);
                if let Some(d) = &c.detail {
                    let _ = write!(out, "  {d}");
                }
                out.push('\n');
            }
        }
        let _ = writeln!(out, "\nresult: {}", if self.pass { "PASS" } else { "FAIL" });
        out
    }

    /// Table rows as `given,outcome,probability`; reports without tables
    /// list their checks instead.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let result: csv::Result<()> = (|| {
            if self.tables.is_empty() {
                w.write_record(["check", "defect", "tolerance", "pass"])?;
                for c in &self.checks {
                    w.write_record([c.name.clone(), format!("{:e}", c.defect), format!("{:e}", c.tolerance), c.pass.to_string()])?;
                }
            } else {
                w.write_record(["given", "outcome", "probability"])?;
                for t in &self.tables {
                    for (label, p) in &t.entries {
                        w.write_record([t.given.as_str(), label.as_str(), &p.to_string()])?;
                    }
                }
            }
            Ok(())
        })();
        result.expect("writing to memory cannot fail");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

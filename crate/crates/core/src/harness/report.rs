//! Tabular results and CSV output.

use crate::conditions::ConditionVerdict;
use crate::geometry::Point;
use crate::norms::NormReport;
use crate::operators::OperatorValue;
use crate::Result;
use std::path::{Path, PathBuf};

/// One asserted property of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

/// A CSV table; `name` is the file stem.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Table {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Result of one experiment or command.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub experiment: String,
    /// False when the hypotheses were bypassed with `--force`.
    pub conforming: bool,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn new(experiment: impl Into<String>) -> Outcome {
        Outcome { experiment: experiment.into(), conforming: true, checks: Vec::new(), tables: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Writes every table plus `checks.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for t in &self.tables {
            out.push(t.write(dir)?);
        }
        let mut checks = Table::new("checks", &["experiment", "check", "pass", "conforming", "detail"]);
        for c in &self.checks {
            checks.push(vec![self.experiment.clone(), c.name.clone(), c.pass.to_string(), self.conforming.to_string(), c.detail.clone()]);
        }
        out.push(checks.write(dir)?);
        Ok(out)
    }

    /// Human-readable PASS/FAIL summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!("{} {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        let tag = if self.conforming { "" } else { " [non-conforming: hypotheses bypassed]" };
        s.push_str(&format!("{} {}{tag}\n", if self.passed() { "PASS" } else { "FAIL" }, self.experiment));
        s
    }
}

/// Formats a number for CSV; shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub const NORM_HEADER: [&str; 7] = ["norm_kind", "value", "argmax_radius", "error", "truncation_radius", "divergence_flag", "growth_slope"];
pub const VERDICT_HEADER: [&str; 5] = ["condition", "holds", "best_constant", "witness_radius", "method"];

pub fn norm_row(r: &NormReport) -> Vec<String> {
    vec![
        r.kind.name().to_string(),
        num(r.value),
        opt(r.argmax_radius),
        num(r.error),
        opt(r.truncation_radius),
        r.divergent.to_string(),
        opt(r.growth_slope),
    ]
}

pub fn norm_table(name: impl Into<String>, reports: &[NormReport]) -> Table {
    let mut t = Table::new(name, &NORM_HEADER);
    for r in reports {
        t.push(norm_row(r));
    }
    t
}

pub fn verdict_row(v: &ConditionVerdict) -> Vec<String> {
    vec![v.condition.name().to_string(), v.holds.to_string(), num(v.best_constant), opt(v.witness_radius), v.method.name().to_string()]
}

pub fn verdict_table(name: impl Into<String>, verdicts: &[ConditionVerdict]) -> Table {
    let mut t = Table::new(name, &VERDICT_HEADER);
    for v in verdicts {
        t.push(verdict_row(v));
    }
    t
}

/// Operator samples as `(x1, .., xn, value, error)`.
pub fn operator_table(name: impl Into<String>, dim: usize, samples: &[(Point, OperatorValue)]) -> Table {
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    header.push("error".into());
    let mut t = Table { name: name.into(), header, rows: Vec::new() };
    for (p, v) in samples {
        let mut row: Vec<String> = p[..dim].iter().map(|c| num(*c)).collect();
        row.push(num(v.value));
        row.push(num(v.error));
        t.rows.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::NormKind;

    #[test]
    fn tables_write_csv() {
        let dir = tempfile::tempdir().unwrap();
        let r = NormReport {
            kind: NormKind::Luxemburg,
            value: 1.5,
            argmax_radius: None,
            error: 1e-9,
            truncation_radius: Some(0.25),
            divergent: false,
            growth_slope: None,
        };
        let path = norm_table("n", &[r]).write(dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "norm_kind,value,argmax_radius,error,truncation_radius,divergence_flag,growth_slope\nluxemburg,1.5,,0.000000001,0.25,false,\n");
    }
}

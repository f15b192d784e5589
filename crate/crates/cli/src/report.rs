use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::config::ConfigError;

pub const SCHEMA_VERSION: &str = "1.0.0";

/// Non-finite values serialize as `null`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_none()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    /// `value ≤ tolerance`.
    #[serde(rename = "<=")]
    AtMost,
    /// `value < tolerance`.
    #[serde(rename = "<")]
    Below,
    /// `value ≥ tolerance`.
    #[serde(rename = ">=")]
    AtLeast,
    /// `value` inside `[tolerance, upper]`.
    #[serde(rename = "in")]
    Within,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultEntry {
    pub name: String,
    pub value: Num,
    pub tolerance: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<Num>,
    pub comparison: Comparison,
    pub pass: bool,
}

impl ResultEntry {
    pub fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self::build(name, value, tol, None, Comparison::AtMost, value <= tol)
    }

    pub fn below(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self::build(name, value, tol, None, Comparison::Below, value < tol)
    }

    pub fn at_least(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self::build(name, value, tol, None, Comparison::AtLeast, value >= tol)
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self::build(name, value, lo, Some(hi), Comparison::Within, lo <= value && value <= hi)
    }

    fn build(name: impl Into<String>, value: f64, tol: f64, upper: Option<f64>, cmp: Comparison, pass: bool) -> Self {
        ResultEntry {
            name: name.into(),
            value: Num(value),
            tolerance: Num(tol),
            upper: upper.map(Num),
            comparison: cmp,
            pass: pass && value.is_finite(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorStanza {
    /// `schema`, `gap`, `capacity`, `geometry`, `precondition`, `numerics` or `io`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub message: String,
}

impl ErrorStanza {
    pub fn schema(e: &ConfigError) -> Self {
        ErrorStanza {
            kind: "schema".into(),
            key: e.key.clone(),
            message: e.message.clone(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        ErrorStanza {
            kind: "io".into(),
            key: None,
            message: message.into(),
        }
    }

    pub fn from_core(stage: &str, e: &hall_core::Error) -> Self {
        use hall_core::Error as E;
        let kind = match e {
            E::GapViolation { .. } | E::GapClosure { .. } | E::FrequencyOutOfGap { .. } | E::BandTouching { .. } => "gap",
            E::Capacity { .. } => "capacity",
            E::Geometry(_) | E::MalformedPath(_) | E::Orientation(_) | E::Incommensurate { .. } | E::Inexact { .. } => {
                "geometry"
            }
            E::Precondition(_) | E::Capability(_) => "precondition",
            E::Config(_) | E::InvalidArgument(_) => "schema",
            E::Solver { .. } | E::StepSize { .. } | E::BasisMismatch(..) => "numerics",
        };
        ErrorStanza {
            kind: kind.into(),
            key: Some(stage.to_string()),
            message: e.to_string(),
        }
    }
}

/// One sweep axis: the first column is the axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Table {
            name: name.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, header: &str) -> Option<Vec<f64>> {
        let j = self.headers.iter().position(|h| h == header)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.headers)?;
        for row in &self.rows {
            // Shortest round-trip representation, exponent form for extreme magnitudes.
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub scenario: String,
    pub statement: String,
    pub inputs: Value,
    pub results: Vec<ResultEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorStanza>,
    pub diagnostics: BTreeMap<String, Value>,
    pub timings: BTreeMap<String, f64>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Error,
    ToleranceFailure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Error => 1,
            Outcome::ToleranceFailure => 2,
        }
    }
}

impl Report {
    pub fn new(scenario: &str, statement: &str, inputs: Value) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.into(),
            statement: statement.into(),
            inputs,
            results: Vec::new(),
            error: None,
            diagnostics: BTreeMap::new(),
            timings: BTreeMap::new(),
            tables: Vec::new(),
        }
    }

    pub fn failed(scenario: &str, statement: &str, inputs: Value, error: ErrorStanza) -> Self {
        let mut r = Report::new(scenario, statement, inputs);
        r.error = Some(error);
        r
    }

    pub fn outcome(&self) -> Outcome {
        if self.error.is_some() {
            Outcome::Error
        } else if self.results.iter().all(|r| r.pass) {
            Outcome::Pass
        } else {
            Outcome::ToleranceFailure
        }
    }

    pub fn result(&self, name: &str) -> Option<&ResultEntry> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn diag(&mut self, key: &str, v: impl Serialize) {
        let value = serde_json::to_value(v).expect("diagnostic serializes");
        self.diagnostics.insert(key.into(), value);
    }

    pub fn diag_f64(&mut self, key: &str, v: f64) {
        self.diag(key, Num(v));
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// The JSON report with the timing block removed; the determinism contract covers this string.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("timings");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    /// Writes `report.json` and one CSV per table; returns the written paths.
    pub fn write(&self, dir: &Path, plots: bool) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let report = dir.join("report.json");
        fs::write(&report, self.to_json())?;
        written.push(report);
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            t.write_csv(&p)?;
            written.push(p);
            if plots {
                let svg = dir.join(format!("{}.svg", t.name));
                crate::plot::plot_table(t, &svg).map_err(std::io::Error::other)?;
                written.push(svg);
            }
        }
        Ok(written)
    }
}

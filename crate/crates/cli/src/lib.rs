//! Configuration-driven Hall-response experiments with JSON reports and CSV tables.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::Value;

pub mod config;
pub mod plot;
pub mod report;
pub mod scenarios;

use config::{ConfigError, ExperimentConfig, Loaded, Scenario};
use report::{ErrorStanza, Outcome, Report};

pub const DEFAULT_OUT_DIR: &str = "hall-lab-out";

/// Runs a validated configuration; scenario failures become the report's error stanza.
pub fn run_config(c: &ExperimentConfig) -> Report {
    let mut report = Report::new(c.scenario.name(), c.scenario.statement(), config::inputs_echo(c));
    let t = Instant::now();
    if let Err(e) = scenarios::dispatch(c, &mut report) {
        report.error = Some(e);
    }
    report.timings.insert("total".into(), t.elapsed().as_secs_f64());
    report
}

/// Report for a configuration that failed to load.
pub fn schema_failure(raw: Option<&Value>, e: &ConfigError) -> Report {
    let scenario = raw
        .and_then(|v| v.get("scenario"))
        .and_then(Value::as_str)
        .and_then(Scenario::from_name);
    let (name, statement) = match scenario {
        Some(s) => (s.name(), s.statement()),
        None => ("unknown", ""),
    };
    Report::failed(name, statement, Value::Null, ErrorStanza::schema(e))
}

pub struct RunRequest<'a> {
    pub config: &'a Path,
    pub overrides: &'a [String],
    pub out: Option<&'a Path>,
    pub plots: Option<bool>,
}

pub struct RunOutcome {
    pub report: Report,
    pub out_dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn outcome(&self) -> Outcome {
        self.report.outcome()
    }
}

/// Loads the file, applies overrides and flags, runs, and writes the report.
pub fn run_request(req: &RunRequest) -> RunOutcome {
    let raw: Option<Value> = std::fs::read_to_string(req.config)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());
    let loaded = load(req);
    let (report, plots, dir) = match loaded {
        Ok(l) => {
            let dir = req
                .out
                .map(Path::to_path_buf)
                .or_else(|| l.config.output.dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
            let plots = req.plots.unwrap_or(l.config.output.plots);
            (run_config(&l.config), plots, dir)
        }
        Err(e) => {
            let dir = req.out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
            (schema_failure(raw.as_ref(), &e), false, dir)
        }
    };
    finish(report, dir, plots)
}

fn load(req: &RunRequest) -> Result<Loaded, ConfigError> {
    let overrides = req
        .overrides
        .iter()
        .map(|s| config::parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    config::load_file(req.config, &overrides)
}

fn finish(mut report: Report, dir: PathBuf, plots: bool) -> RunOutcome {
    match report.write(&dir, plots) {
        Ok(written) => RunOutcome {
            report,
            out_dir: dir,
            written,
        },
        Err(e) => {
            if report.error.is_none() {
                report.error = Some(ErrorStanza::io(format!("cannot write to {}: {e}", dir.display())));
            }
            RunOutcome {
                report,
                out_dir: dir,
                written: Vec::new(),
            }
        }
    }
}

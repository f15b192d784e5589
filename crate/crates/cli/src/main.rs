use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hall_lab::config::{self, Scenario};
use hall_lab::report::ErrorStanza;
use hall_lab::{run_request, RunRequest};

#[derive(Parser)]
#[command(name = "hall-lab", version, about = "Hall-response experiments on small lattice tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario; exit 0 on pass, 2 on tolerance failure, 1 on error.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dotted `key=value` override; the value is parsed as JSON when possible.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Emit SVG plots next to the CSV tables (overrides `output.plots`).
        #[arg(long)]
        plots: bool,
    },
    /// Check a configuration against the schema; exit 1 when invalid.
    Validate { config: PathBuf },
    /// List the scenarios and the statements they instantiate.
    ListScenarios,
    /// Print the published configuration schema.
    Schema,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            overrides,
            plots,
        } => {
            let res = run_request(&RunRequest {
                config: &config,
                overrides: &overrides,
                out: out.as_deref(),
                plots: plots.then_some(true),
            });
            let rep = &res.report;
            println!("scenario: {}", rep.scenario);
            if !rep.statement.is_empty() {
                println!("statement: {}", rep.statement);
            }
            for r in &rep.results {
                let tol = match r.upper {
                    Some(u) => format!("[{}, {}]", fmt(r.tolerance.0), fmt(u.0)),
                    None => fmt(r.tolerance.0),
                };
                let cmp = serde_json::to_value(r.comparison).expect("comparison serializes");
                println!(
                    "{} {}: {} {} {}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.name,
                    fmt(r.value.0),
                    cmp.as_str().unwrap_or("?"),
                    tol
                );
            }
            if let Some(e) = &rep.error {
                eprintln!("error [{}]{}: {}", e.kind, e.key.as_ref().map(|k| format!(" at {k}")).unwrap_or_default(), e.message);
            }
            println!("report: {}", res.out_dir.join("report.json").display());
            ExitCode::from(res.outcome().exit_code() as u8)
        }
        Command::Validate { config } => {
            let stanza = match config::load_file(&config, &[]) {
                Ok(l) => serde_json::json!({
                    "valid": true,
                    "scenario": l.config.scenario.name(),
                    "resolved": l.merged,
                }),
                Err(e) => serde_json::json!({"valid": false, "error": ErrorStanza::schema(&e)}),
            };
            println!("{}", serde_json::to_string_pretty(&stanza).expect("stanza serializes"));
            if stanza["valid"] == true {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<28} {}", s.name(), s.statement());
            }
            ExitCode::SUCCESS
        }
        Command::Schema => {
            print!("{}", config::SCHEMA);
            ExitCode::SUCCESS
        }
    }
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6e}")
    } else {
        format!("{v}")
    }
}

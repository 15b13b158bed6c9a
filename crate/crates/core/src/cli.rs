//! Command-line front end.

use crate::analysis::{self, Analysis, Settings};
use crate::error::Error;
use crate::report::{CheckReport, Status};
use crate::scenarios;
use clap::{Parser, Subcommand};
use serde_json::json;
use std::io::{self, IsTerminal, Write};

#[derive(Debug, Parser)]
#[command(name = "semiinv", version, about = "Numerical verification of semi-invariant Riemannian submersions")]
pub struct Cli {
    /// Emit one JSON record per line instead of the human table.
    #[arg(long, global = true)]
    pub json: bool,
    /// Override the scenario's sampling seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the number of sample points.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: Option<u64>,
    /// Multiply every tolerance by this factor.
    #[arg(long = "tol-scale", global = true, default_value_t = 1.0)]
    pub tol_scale: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the semi-invariant classification of a scenario.
    Classify {
        /// Scenario file path or `builtin:NAME`.
        scenario: String,
    },
    /// Run every check on a scenario.
    Analyze { scenario: String },
    /// Run the checks over all built-in scenarios against their expectations.
    Verify {
        #[arg(long, required = true)]
        suite: bool,
    },
    /// List the built-in scenarios.
    List,
}

struct Style {
    color: bool,
}

impl Style {
    fn detect() -> Self {
        Self {
            color: std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && io::stdout().is_terminal(),
        }
    }

    fn status(&self, line: String, status: Status) -> String {
        if !self.color {
            return line;
        }
        let code = match status {
            Status::Pass => "32",
            Status::Fail => "31",
            Status::NotApplicable => "2",
            Status::TheoremViolation => "1;35",
        };
        format!("\x1b[{code}m{line}\x1b[0m")
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let style = Style::detect();
    match run(&cli, &mut out, &style) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command, writing to `out`; returns the exit code.
pub fn run_to(cli: &Cli, out: &mut impl Write) -> Result<i32, Error> {
    run(cli, out, &Style { color: false })
}

fn settings(cli: &Cli) -> Settings {
    Settings {
        seed: cli.seed,
        samples: cli.samples.map(|s| s as usize),
        tol_scale: cli.tol_scale,
    }
}

fn io_err(e: io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        message: e.to_string(),
    }
}

fn run(cli: &Cli, out: &mut impl Write, style: &Style) -> Result<i32, Error> {
    let settings = settings(cli);
    match &cli.command {
        Command::Classify { scenario } => {
            let spec = scenarios::resolve(scenario)?;
            let c = analysis::classification(&spec, &settings)?;
            if cli.json {
                let rec = json!({
                    "scenario": spec.label,
                    "kind": c.kind,
                    "dimD1": c.dim_d1,
                    "dimD2": c.dim_d2,
                    "dimMu": c.dim_mu,
                    "spectra": c.spectra,
                });
                writeln!(out, "{rec}").map_err(io_err)?;
            } else {
                writeln!(out, "{}", c.line()).map_err(io_err)?;
            }
            Ok(0)
        }
        Command::Analyze { scenario } => {
            let spec = scenarios::resolve(scenario)?;
            let a = analysis::analyze(&spec, &settings);
            write_analysis(cli.json, &a, out, style).map_err(io_err)?;
            if let Some(e) = &a.degeneracy {
                eprintln!("error: {e}");
            }
            Ok(a.exit_code())
        }
        Command::Verify { .. } => {
            let entries = analysis::run_suite(&settings);
            let mut code = 0;
            for e in &entries {
                write_analysis(cli.json, &e.analysis, out, style).map_err(io_err)?;
                if cli.json {
                    let rec = json!({
                        "suite": e.name,
                        "ok": e.ok(),
                        "expected_failures": analysis::expected_failures(e.name),
                        "unexpected": e.unexpected,
                    });
                    writeln!(out, "{rec}").map_err(io_err)?;
                } else {
                    let verdict = if e.ok() { "OK".to_string() } else { format!("UNEXPECTED {}", e.unexpected.join(", ")) };
                    writeln!(out, "SUITE {} {verdict}\n", e.name).map_err(io_err)?;
                }
                if let Some(d) = &e.analysis.degeneracy {
                    eprintln!("error: {}: {d}", e.name);
                    code = 3;
                } else if !e.ok() && code == 0 {
                    code = 1;
                }
            }
            if !cli.json {
                let good = entries.iter().filter(|e| e.ok()).count();
                writeln!(out, "SUITE RESULT {good}/{} scenarios as expected", entries.len()).map_err(io_err)?;
            }
            Ok(code)
        }
        Command::List => {
            for b in scenarios::BUILTINS {
                if cli.json {
                    writeln!(out, "{}", json!({"name": b.name, "description": b.description})).map_err(io_err)?;
                } else {
                    writeln!(out, "{:<20} {}", b.name, b.description).map_err(io_err)?;
                }
            }
            Ok(0)
        }
    }
}

fn write_analysis(json: bool, a: &Analysis, out: &mut impl Write, style: &Style) -> io::Result<()> {
    if json {
        for r in &a.reports {
            writeln!(out, "{}", r.to_json())?;
        }
        return Ok(());
    }
    writeln!(out, "SCENARIO {}", a.label)?;
    if let Some(c) = &a.classification {
        writeln!(out, "{}", c.line())?;
    }
    for r in &a.reports {
        writeln!(out, "{}", style.status(r.human_line(), r.status))?;
    }
    writeln!(out, "{}", summary(&a.reports))
}

fn summary(reports: &[CheckReport]) -> String {
    let count = |s: Status| reports.iter().filter(|r| r.status == s).count();
    format!(
        "SUMMARY pass={} fail={} not_applicable={} theorem_violation={}",
        count(Status::Pass),
        count(Status::Fail),
        count(Status::NotApplicable),
        count(Status::TheoremViolation)
    )
}

//! Experiment runner CLI.
//!
//! Exit codes: 0 pass, 1 assertion violation, 2 config/runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use schurlab::config::{describe, ExperimentConfig, KINDS};
use schurlab::runner::{run_to_files, selftest};

#[derive(Parser)]
#[command(name = "schurlab", version, about = "Finite-section Schur multiplier laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its report.
    Run {
        /// Path to a JSON config (see `describe <kind>` for parameters).
        config: PathBuf,
    },
    /// List the available experiment kinds.
    ListKinds,
    /// Print the parameter schema of a kind.
    Describe { kind: String },
    /// Run the built-in example corpus.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let cfg = match ExperimentConfig::from_json(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match run_to_files(&cfg) {
                Ok((report, files)) => {
                    for f in &files {
                        println!("wrote {}", f.display());
                    }
                    println!(
                        "{}: {} cases, {} failures, max violation {:.3e}",
                        report.name,
                        report.summary.cases,
                        report.summary.failures,
                        report.summary.max_violation
                    );
                    if report.summary.pass {
                        ExitCode::SUCCESS
                    } else {
                        for c in report.cases.iter().filter(|c| !c.pass).take(5) {
                            eprintln!("violation: {} lhs={} rhs={}", c.id, c.lhs, c.rhs);
                        }
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::ListKinds => {
            for k in KINDS {
                println!("{k}");
            }
            ExitCode::SUCCESS
        }
        Command::Describe { kind } => match describe(&kind) {
            Ok(text) => {
                println!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Selftest => {
            let failures = selftest();
            if failures.is_empty() {
                println!("selftest: all example checks passed");
                ExitCode::SUCCESS
            } else {
                for f in &failures {
                    eprintln!("selftest failure: {f}");
                }
                ExitCode::from(1)
            }
        }
    }
}

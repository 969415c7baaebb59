use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lightcone::cli;

/// Runs infrared-dressing and lightcone-localization studies from a TOML scenario.
#[derive(Parser)]
#[command(name = "lightcone", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write report.json plus CSV tables.
    Run {
        config: PathBuf,
    },
    /// List the study kinds in execution order.
    ListStudies,
    /// Print the bundled scenario.
    EmitDefaults,
}

fn main() -> ExitCode {
    match Args::parse().command {
        Command::Run { config } => match cli::run(&config) {
            Ok(report) => {
                for s in &report.studies {
                    let status = if s.passed { "pass" } else { "FAIL" };
                    println!("{status:4}  {:<28}{:>9.1}s", s.name, s.wall_clock_seconds);
                    if let Some(e) = &s.error {
                        println!("      error: {e}");
                    }
                    for c in s.checks.iter().filter(|c| !c.passed) {
                        println!("      {}: {:e} is not {} {:e}", c.name, c.value, c.comparison, c.threshold);
                    }
                }
                if report.passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::ListStudies => {
            print!("{}", cli::list_studies());
            ExitCode::SUCCESS
        }
        Command::EmitDefaults => {
            print!("{}", cli::DEFAULT_CONFIG);
            ExitCode::SUCCESS
        }
    }
}

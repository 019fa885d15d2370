use aging_harness::compare::{compare, ToleranceSpec};
use aging_harness::config::Function;
use aging_harness::results::{read_csv, to_csv};
use aging_harness::{exit, parse_grid, run, HarnessError, WORKERS_ENV};
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "aging", version, about = "Two-time correlation experiments for stationary growth models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its CSV.
    Run {
        config: PathBuf,
        /// Worker threads; overrides the config. 0 or unset uses all cores.
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Check result rows against reference values.
    Compare { results: PathBuf, tolerances: PathBuf },
    /// Print a closed-form function on a grid as CSV.
    Table {
        /// rho_kpz, rho_ew, ew_variance or rw_abs_expectation.
        function: String,
        /// `x1,x2,...` or `start:stop:count`.
        grid: String,
    },
}

fn fail(err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit::ERROR)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, workers } => match run::run(&config, workers) {
            Ok(rows) => {
                eprintln!("wrote {} rows", rows.len());
                ExitCode::from(exit::OK)
            }
            Err(e) => fail(e),
        },
        Command::Compare { results, tolerances } => {
            let outcome = read_csv(&results).and_then(|rows| {
                let tol = ToleranceSpec::load(&tolerances)?;
                compare(&rows, &tol)
            });
            match outcome {
                Ok(report) => {
                    for v in &report.verdicts {
                        println!(
                            "{} row {} {} [{}]: estimate {} reference {} allowed {}",
                            if v.pass { "PASS" } else { "FAIL" },
                            v.row,
                            v.experiment,
                            v.params,
                            v.estimate,
                            v.reference,
                            v.allowed
                        );
                    }
                    if report.skipped > 0 {
                        println!("skipped {} rows without a reference", report.skipped);
                    }
                    ExitCode::from(if report.passed() { exit::OK } else { exit::COMPARISON_FAILED })
                }
                Err(e) => fail(e),
            }
        }
        Command::Table { function, grid } => {
            let Some(f) = Function::parse(&function) else {
                return fail(HarnessError::config("<table>", format!("unknown function {function:?}")));
            };
            let rows = match parse_grid(&grid).map_err(|m| HarnessError::config("<table>", m)).and_then(|g| {
                run::table_rows(f, &g).map_err(|e| HarnessError::config("<table>", e.to_string()))
            }) {
                Ok(rows) => rows,
                Err(e) => return fail(e),
            };
            if std::io::stdout().write_all(&to_csv(&rows)).is_err() {
                return ExitCode::from(exit::ERROR);
            }
            ExitCode::from(exit::OK)
        }
    }
}

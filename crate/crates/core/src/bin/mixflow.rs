use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mixflow::scenario::{self, load_scenario, output_root, RunStatus};
use mixflow::Error;

/// Multicomponent mixture flow solver.
#[derive(Parser)]
#[command(name = "mixflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write snapshots and summary.json below the output root.
    Run { config: PathBuf },
    /// Run a scenario template over a parameter grid, e.g. `time.dt=2e-3,1e-3;grid.cells=32,64`.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        grid: String,
    },
    /// Parse and validate a scenario without running it.
    Validate { config: PathBuf },
}

fn code(status: RunStatus) -> ExitCode {
    ExitCode::from(status.exit_code() as u8)
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Io(_) => ExitCode::from(RunStatus::SolverFailure.exit_code() as u8),
        _ => code(RunStatus::from_error(e)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = output_root();
    match cli.command {
        Command::Validate { config } => match load_scenario(&config) {
            Ok(s) => {
                println!(
                    "{}: ok ({} species, {} cells)",
                    s.name,
                    s.num_species(),
                    s.grid.cells
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Run { config } => {
            let s = match load_scenario(&config) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            match scenario::run(&s, &root) {
                Ok((outcome, dir)) => {
                    let summary = &outcome.summary;
                    println!(
                        "{}: {:?} -> {}",
                        summary.name,
                        summary.status,
                        dir.display()
                    );
                    if let Some(m) = &summary.message {
                        eprintln!("{m}");
                    }
                    code(summary.status)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Sweep { config, grid } => {
            let s = match load_scenario(&config) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            let axes = match scenario::parse_grid(&grid) {
                Ok(a) => a,
                Err(e) => return fail(&e),
            };
            let report = scenario::sweep(&s, &axes);
            let dir = root.join(format!("{}-sweep", s.name));
            let written = std::fs::create_dir_all(&dir)
                .and_then(|_| {
                    let json =
                        serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?;
                    std::fs::write(dir.join("sweep.json"), json)
                })
                .map_err(|e| Error::Io(format!("{}: {e}", dir.display())));
            if let Err(e) = written {
                return fail(&e);
            }
            let failed = report
                .entries
                .iter()
                .filter(|e| e.status != RunStatus::Converged)
                .count();
            println!(
                "{}: {} runs, {} failed -> {}",
                s.name,
                report.entries.len(),
                failed,
                dir.join("sweep.json").display()
            );
            ExitCode::SUCCESS
        }
    }
}

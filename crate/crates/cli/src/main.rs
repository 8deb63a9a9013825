use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypoctl::run::{execute, RunOptions, Verdict};
use hypoctl::{scenarios, CliError};

#[derive(Parser)]
#[command(
    name = "hypoctl",
    version,
    about = "Run controllability scenarios for hypoelliptic and fractional heat equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the shipped scenarios.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario file or a shipped scenario by name.
    Run {
        scenario: String,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides the seed in the file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Also write f0/h0/terminal fields as .bin containers.
        #[arg(long)]
        emit_fields: bool,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> Result<ExitCode, CliError> {
    match Cli::parse().command {
        Command::List { json } => {
            let all = scenarios::shipped()?;
            if json {
                let rows: Vec<_> = all
                    .iter()
                    .map(|s| {
                        serde_json::json!({
                            "name": s.scenario.name,
                            "experiment": s.scenario.experiment.name(),
                            "description": s.scenario.description,
                        })
                    })
                    .collect();
                println!("{}", serde_json::to_string_pretty(&rows).expect("plain json"));
            } else {
                for s in &all {
                    println!(
                        "{:<34} {:<11} {}",
                        s.scenario.name,
                        s.scenario.experiment.name(),
                        s.scenario.description
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            scenario,
            output_dir,
            seed,
            threads,
            emit_fields,
        } => {
            if let Some(n) = threads {
                // fails only if a pool already exists
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            let loaded = scenarios::load(&scenario)?;
            let report = execute(
                &loaded,
                &RunOptions {
                    output_dir,
                    seed,
                    emit_fields,
                },
            )?;
            let verdict = match report.verdict {
                Verdict::Pass => "pass",
                Verdict::Negative => "negative",
            };
            println!("{}: {verdict}", loaded.scenario.name);
            println!(
                "{}",
                serde_json::to_string_pretty(&report.summary["results"]).expect("plain json")
            );
            println!("wrote {} files to {}", report.files.len(), report.output_dir.display());
            Ok(match report.verdict {
                Verdict::Pass => ExitCode::SUCCESS,
                Verdict::Negative => ExitCode::from(2),
            })
        }
    }
}

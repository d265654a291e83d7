use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vacuum_shake::scenario::{compare_baseline, run_scenario, CompareTolerances, CONFIG_SCHEMA};
use vacuum_shake::Error;

#[derive(Parser)]
#[command(name = "vacuum-shake", version, about = "Pair emission from a shaken two-level atom")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its artifacts.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (VACUUM_SHAKE_THREADS takes precedence).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare a result file against a baseline, field by field.
    Compare {
        result: PathBuf,
        baseline: PathBuf,
        #[arg(long = "tol-file")]
        tol_file: Option<PathBuf>,
    },
    /// Print the config JSON schema.
    Schema,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error[{}]: {e}", e.class());
    if let Error::Numerical { diagnostics, .. } = e {
        eprintln!("diagnostics: {diagnostics}");
    }
    ExitCode::from(e.exit_code() as u8)
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, Error> {
    match std::env::var("VACUUM_SHAKE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Schema(format!("VACUUM_SHAKE_THREADS must be a positive integer, got '{v}'"))),
        Err(_) => Ok(flag),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Schema => {
            print!("{CONFIG_SCHEMA}");
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            threads: flag,
        } => {
            match threads(flag) {
                Ok(Some(0)) => return fail(&Error::Schema("thread count must be >= 1".into())),
                Ok(Some(n)) => {
                    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                        eprintln!("warning: could not size the thread pool: {e}");
                    }
                }
                Ok(None) => {}
                Err(e) => return fail(&e),
            }
            match run_scenario(&config, out.as_deref()) {
                Ok(manifest) => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&manifest.summary).unwrap_or_default()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Compare {
            result,
            baseline,
            tol_file,
        } => {
            let tol = match tol_file.as_deref().map(CompareTolerances::load).transpose() {
                Ok(t) => t.unwrap_or_default(),
                Err(e) => return fail(&e),
            };
            match compare_baseline(&result, &baseline, &tol) {
                Ok(report) => {
                    println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
                    if report.passed {
                        ExitCode::SUCCESS
                    } else {
                        for f in &report.failures {
                            eprintln!(
                                "FAIL {}: {} vs {} (rel {:.3e} > {:.1e})",
                                f.location, f.result, f.baseline, f.rel_deviation, f.tolerance
                            );
                        }
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(&e),
            }
        }
    }
}

mod artifacts;
mod compare;
mod config;
mod experiments;
mod svg;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use config::{ConfigError, Experiment};

/// Greedy optimal quantization experiments.
#[derive(Parser)]
#[command(name = "greedyq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a TOML config (batches run concurrently).
    Run { config: PathBuf },
    /// Merge the trajectory tables of finished runs into one CSV.
    Compare {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Write to this file instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print a config template with the defaults of an experiment.
    GenConfig { experiment: String },
}

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

fn threads() -> Result<(), String> {
    let Ok(v) = std::env::var("GREEDYQ_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("GREEDYQ_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(path: &Path) -> ExitCode {
    let configs = match config::load(path) {
        Ok(c) => c,
        Err(ConfigError::Empty) => {
            eprintln!("error: `{}` defines no experiment\n\nusage: greedyq run <config.toml>\n       greedyq gen-config <experiment>", path.display());
            return ExitCode::from(USAGE);
        }
        Err(ConfigError::Invalid(m)) => {
            eprintln!("error: {}: {m}", path.display());
            return ExitCode::from(USAGE);
        }
    };
    let results: Vec<_> = configs.par_iter().map(experiments::run).collect();
    let mut failed = false;
    let mut out = std::io::stdout().lock();
    for (cfg, r) in configs.iter().zip(results) {
        match r {
            Ok((files, outcome)) => {
                let _ =
                    writeln!(out, "{}: done, {} files in {}", cfg.experiment, files.len(), cfg.output_dir.display());
                for (k, v) in &outcome.results {
                    let _ = writeln!(out, "  {k} = {v}");
                }
                for (k, ok) in &outcome.checks {
                    let _ = writeln!(out, "  {k}: {}", if *ok { "ok" } else { "NOT MET" });
                }
            }
            Err(e) => {
                failed = true;
                eprintln!("error: {} (line {}): {e:#}", cfg.experiment, cfg.line);
            }
        }
    }
    if failed {
        ExitCode::from(FAILURE)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = threads() {
        eprintln!("error: {e}");
        return ExitCode::from(USAGE);
    }
    match cli.command {
        Command::Run { config } => run(&config),
        Command::Compare { runs, out } => match compare::compare(&runs) {
            Ok(csv) => {
                let written = match &out {
                    Some(p) => std::fs::write(p, csv).map_err(|e| format!("cannot write `{}`: {e}", p.display())),
                    None => std::io::stdout().write_all(csv.as_bytes()).map_err(|e| e.to_string()),
                };
                match written {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => {
                        eprintln!("error: {e}");
                        ExitCode::from(FAILURE)
                    }
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(FAILURE)
            }
        },
        Command::GenConfig { experiment } => match Experiment::parse(&experiment) {
            Some(e) => {
                print!("{}", config::template(e));
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: unknown experiment `{experiment}`; available: {}", Experiment::names());
                ExitCode::from(USAGE)
            }
        },
    }
}

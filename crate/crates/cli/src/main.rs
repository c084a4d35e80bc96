//! `lmkyle`: run the experiments from a config file.
//!
//! Exit codes: 0 when every check passes, 2 on a statistical failure,
//! 1 on a configuration or runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lmkyle::config::{parse_config, Experiment, ExperimentConfig};
use lmkyle::experiments::{run_experiment, write_outputs};

#[derive(Parser)]
#[command(name = "lmkyle", version, about = "Kyle-Back equilibria with long-memory noise trading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available experiments.
    List,
    /// Print a config in canonical form: a file's, or an experiment's defaults.
    DumpConfig {
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        experiment: Option<String>,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{:<22}{}", e.name(), e.description());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::DumpConfig { config, experiment } => {
            let cfg = match (config, experiment) {
                (Some(path), _) => load(&path)?,
                (None, Some(name)) => {
                    let e = Experiment::from_name(&name).ok_or_else(|| format!("unknown experiment '{name}'"))?;
                    ExperimentConfig::defaults(e)
                }
                (None, None) => return Err("dump-config needs a config path or --experiment".into()),
            };
            print!("{}", cfg.dump());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, seed, paths, steps, out } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(p) = paths {
                cfg.paths = p;
            }
            if let Some(n) = steps {
                cfg.steps = n;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            let output = run_experiment(&cfg).map_err(|e| e.to_string())?;
            write_outputs(&cfg, &output).map_err(|e| e.to_string())?;
            print!("{}", output.summary.render());
            Ok(if output.passed() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

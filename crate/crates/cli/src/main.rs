use std::path::PathBuf;
use std::process::ExitCode;

use bpire::config::{self, ExperimentConfig};
use bpire::{CliError, Command};
use clap::Parser;

/// Life-period tails of branching processes with immigration in random environments.
#[derive(Debug, Parser)]
#[command(name = "bpire", version)]
struct Args {
    command: Command,
    /// TOML or JSON experiment file (optional for `verify` and `report`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

fn resolve(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => config::load(path)?,
        None if matches!(args.command, Command::Verify | Command::Report) => {
            ExperimentConfig { label: Some(args.command.as_str().into()), ..Default::default() }
        }
        None => return Err(CliError::Usage(format!("`{}` needs --config", args.command.as_str()))),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = args.workers {
        cfg.workers = workers;
    }
    cfg.validate_knobs().map_err(|(key, message)| CliError::Usage(format!("--{key}: {message}")))?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = resolve(&args).and_then(|cfg| bpire::run(args.command, &cfg, &args.out));
    match result {
        Ok(outcome) => {
            if let Some(suite) = &outcome.suite {
                for c in &suite.criteria {
                    println!("[{}] {:>2} {} ({:.1} s)", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name, c.elapsed.as_secs_f64());
                }
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.exit_code == bpire::error::EXIT_UNDECIDED {
                eprintln!("root certificate undecided; see root.json");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

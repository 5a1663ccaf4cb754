//! `carleson`: experiment driver for the discrete Carleson laboratory.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::config::{parse_overrides, Config};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Weyl,
    Approx,
    Phi,
    Arcs,
    Carleson,
    Kappa,
    Verify,
}

/// Any configuration key can also be given as `--key value`.
#[derive(Debug, Parser)]
#[command(name = "carleson", version, about = "Experiments on the discrete Carleson operator")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0: one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Further `--key value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    rest: Vec<String>,
}

fn run(args: Args) -> Result<(), CliError> {
    let mut overrides = parse_overrides(&args.rest)?;
    if let Some(s) = args.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    if let Some(w) = args.workers {
        overrides.push(("workers".into(), w.to_string()));
    }
    if let Some(o) = &args.out {
        overrides.push(("out".into(), o.display().to_string()));
    }
    let cfg = Config::load(args.config.as_deref(), &overrides)?;
    std::fs::create_dir_all(cfg.out_dir())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.get("workers")?)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match args.command {
        Command::Weyl => commands::weyl::run(&cfg),
        Command::Approx => commands::approx::run(&cfg),
        Command::Phi => commands::phi::run(&cfg),
        Command::Arcs => commands::arcs::run(&cfg),
        Command::Carleson => commands::carleson::run(&cfg),
        Command::Kappa => commands::kappa::run(&cfg),
        Command::Verify => commands::verify::run(&cfg),
    })
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("carleson: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

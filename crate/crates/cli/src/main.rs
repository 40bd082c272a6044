mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::commands::Failure;
use crate::config::Config;
use crate::output::{unix_now, Metadata, OutDir};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    Certify,
    VerifyBound,
    Approximate,
    Run,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Certify => "certify",
            Self::VerifyBound => "verify-bound",
            Self::Approximate => "approximate",
            Self::Run => "run",
        }
    }
}

/// Contraction-certified reservoir computing.
///
/// Exit codes: 0 success, 1 usage or input error, 2 negative verdict,
/// 3 pipeline stage failure.
#[derive(Debug, Parser)]
#[command(name = "rcuniv", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed for every random stage.
    #[arg(long)]
    seed: Option<u64>,
    /// Washout tolerance: clean entries are within this of the echo state.
    #[arg(long)]
    tol: Option<f64>,
    /// Tolerance added to bounds when comparing measured distances.
    #[arg(long)]
    compare_tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model file (JSON).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Input signal CSV (with its JSON sidecar).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Second model for verify-bound.
    #[arg(long)]
    second: Option<PathBuf>,
}

fn effective_config(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p).map_err(Failure::usage)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seeds.root = s;
    }
    if let Some(t) = cli.tol {
        cfg.tolerances.washout = t;
    }
    if let Some(t) = cli.compare_tol {
        cfg.tolerances.compare = t;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    if let Some(m) = &cli.model {
        cfg.model.path = Some(m.clone());
    }
    if let Some(i) = &cli.input {
        cfg.input.path = Some(i.clone());
    }
    if let Some(s) = &cli.second {
        cfg.verify.second = Some(s.clone());
    }
    if !(cfg.tolerances.washout > 0.0 && cfg.tolerances.compare >= 0.0) {
        return Err(Failure::usage("tolerances must be positive"));
    }
    Ok(cfg)
}

fn execute(cli: &Cli, started: f64) -> Result<u8, Failure> {
    let cfg = effective_config(cli)?;
    let out = OutDir::create(&cfg.output.dir)?;
    out.write("config.toml", &cfg.to_toml())?;
    let result = match cli.command {
        Command::Certify => commands::certify(&cfg, &out),
        Command::VerifyBound => commands::verify_bound(&cfg, &out),
        Command::Approximate => commands::approximate(&cfg, &out),
        Command::Run => commands::run(&cfg, &out),
    };
    let code = match &result {
        Ok(c) => *c,
        Err(f) => f.code,
    };
    let meta = Metadata {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        started_unix: started,
        finished_unix: unix_now(),
        exit_code: code,
    };
    out.write_json("metadata.json", &meta)?;
    result
}

fn main() -> ExitCode {
    let started = unix_now();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli, started) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

//! Command-line front end: configuration, sweep orchestration, and result
//! emission for the quantized-receiver studies.
//!
//! Exit codes: 0 success, 2 configuration error, 3 computational resource
//! limit exceeded.  Errors print as a single machine-parsable line on
//! stderr: `error: <kind>: <detail>`.

mod args;
mod commands;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, ConfigFile, Format};

/// CLI-level failure with its process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Lib(dqmimo::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(dqmimo::Error::ResourceLimit(_)) => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "error: config: {m}"),
            CliError::Io(m) => write!(f, "error: io: {m}"),
            CliError::Lib(e @ dqmimo::Error::ResourceLimit(_)) => {
                write!(f, "error: resource-limit: {e}")
            }
            CliError::Lib(e) => write!(f, "error: runtime: {e}"),
        }
    }
}

impl From<dqmimo::Error> for CliError {
    fn from(e: dqmimo::Error) -> Self {
        CliError::Lib(e)
    }
}

/// Applies `DQMIMO_WORKERS` to the global worker pool before any study runs.
fn init_workers() {
    if let Ok(s) = std::env::var("DQMIMO_WORKERS") {
        if let Ok(n) = s.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = ConfigFile::load(cli.config.as_ref())?;
    let seed = cfg.u64(cli.seed, "seed")?.unwrap_or(1);
    let format = match (cli.format, cfg.string(None, "format")?) {
        (Some(f), _) => f,
        (None, Some(s)) => match s.to_ascii_lowercase().as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => {
                return Err(CliError::config(format!(
                    "unknown format {other:?} (expected csv or json)"
                )))
            }
        },
        (None, None) => Format::Csv,
    };
    let output = match (&cli.output, cfg.string(None, "output")?) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(s)) => Some(s.into()),
        (None, None) => None,
    };

    let (table, meta) = match &cli.command {
        Command::CountRegions(a) => commands::count_regions(a, &cfg, seed)?,
        Command::Bounds(a) => commands::bounds(a, &cfg, seed)?,
        Command::Fig4(a) => commands::fig4(a, &cfg, seed)?,
        Command::Tradeoff(a) => commands::tradeoff(a, &cfg, seed)?,
        Command::Capacity(a) => commands::capacity(a, &cfg, seed)?,
        Command::Simulate(a) => commands::simulate(a, &cfg, seed)?,
        Command::ExpansionCheck(a) => commands::expansion_check(a, &cfg, seed)?,
    };
    output::emit(&table, &meta, format, output.as_deref())
}

fn main() -> ExitCode {
    init_workers();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

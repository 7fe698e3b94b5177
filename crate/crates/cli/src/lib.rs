//! Command-line front end: reads a TOML scenario, runs one command and
//! prints the result as a table, CSV or a TOML result file.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use config::{Command, ScenarioConfig};
pub use error::{CliError, Result};
pub use report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Action {
    /// Run the command named in the config file.
    Run,
    Mean,
    Wmean,
    CondMean,
    VarDecomp,
    Prefer,
    Ce,
    CeSchedule,
    MartingaleCheck,
    ExitTime,
    Estimate,
    Lln,
    Clt,
}

impl Action {
    fn command(self) -> Option<Command> {
        Some(match self {
            Action::Run => return None,
            Action::Mean => Command::Mean,
            Action::Wmean => Command::Wmean,
            Action::CondMean => Command::CondMean,
            Action::VarDecomp => Command::VarDecomp,
            Action::Prefer => Command::Prefer,
            Action::Ce => Command::Ce,
            Action::CeSchedule => Command::CeSchedule,
            Action::MartingaleCheck => Command::MartingaleCheck,
            Action::ExitTime => Command::ExitTime,
            Action::Estimate => Command::Estimate,
            Action::Lln => Command::Lln,
            Action::Clt => Command::Clt,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Structured,
}

#[derive(Debug, Parser)]
#[command(
    name = "fmean",
    version,
    about = "Quasi-arithmetic means, certainty equivalents and their estimators"
)]
pub struct Args {
    /// Command to run; `run` takes it from the config.
    #[arg(value_enum)]
    pub action: Action,
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Also write the structured result to this file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Overrides `options.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for Monte Carlo work.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    pub workers: Option<u16>,
    /// Overrides `options.tol`.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

/// Loads the config, applies command-line overrides and runs the command.
pub fn execute(args: &Args) -> Result<Report> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    log::debug!("loaded {}", args.config.display());
    if args.seed.is_some() {
        cfg.options.seed = args.seed;
    }
    if args.tol.is_some() {
        cfg.options.tol = args.tol;
    }
    let command = args
        .action
        .command()
        .or(cfg.command)
        .ok_or(CliError::NoCommand)?;
    let report = match args.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.into())
            .build()?
            .install(|| commands::execute(command, &cfg))?,
        None => commands::execute(command, &cfg)?,
    };
    if let Some(path) = &args.out {
        std::fs::write(path, report.to_toml()?).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
    }
    Ok(report)
}

/// Parses `argv`, runs, prints to `out`/`err` and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    let rendered = execute(&args).and_then(|report| match args.format {
        Format::Table => Ok(report.to_text()),
        Format::Csv => report.to_csv(),
        Format::Structured => report.to_toml(),
    });
    match rendered {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            log::error!("{e}");
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

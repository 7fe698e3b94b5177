use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize result: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("{kind} `{name}` is not defined in the config")]
    Unresolved { kind: &'static str, name: String },
    #[error("missing `{0}` for this command")]
    Missing(&'static str),
    #[error("no command given on the command line or in the config")]
    NoCommand,
    #[error("invalid result file: {0}")]
    InvalidResult(String),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Core(#[from] fmean_core::Error),
}

impl CliError {
    /// 3 for numerical failures inside the core, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

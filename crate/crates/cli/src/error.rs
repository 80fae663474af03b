use std::io;
use std::path::PathBuf;

use masklab_core::{GaloisError, MaskError, MetricsError, MonteCarloError, ResponseError, SpectraError};
use thiserror::Error;

use crate::indexset::IndexSetError;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 2;
    pub const CONTRACT: u8 = 3;
    pub const IO: u8 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, specs, index sets or budgets.
    #[error("{0}")]
    Config(String),
    /// A numeric check did not hold.
    #[error("{0}")]
    Contract(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("writing output: {0}")]
    Stream(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Contract(_) => exit::CONTRACT,
            CliError::Io { .. } | CliError::Stream(_) => exit::IO,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

macro_rules! config_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Config(e.to_string())
            }
        }
    )*};
}

config_errors!(GaloisError, MaskError, SpectraError, ResponseError, MetricsError, MonteCarloError, IndexSetError);

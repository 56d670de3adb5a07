use std::path::PathBuf;

use apfp_core::error::Error;

/// Exit codes of the `apfp` binary.
pub mod exit {
    pub const OK: u8 = 0;
    pub const WRITE_FAILURE: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const NUMERIC: u8 = 3;
    pub const NOT_IN_CLOSURE: u8 = 4;
    pub const NO_CONVERGENCE: u8 = 5;
    pub const RANK_TOO_HIGH: u8 = 6;
    pub const DEMO_FAILED: u8 = 7;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot write report: {0}")]
    Write(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Read { .. } | Self::Parse { .. } | Self::Config(_) => exit::PARSE,
            Self::Write(_) => exit::WRITE_FAILURE,
            Self::Core(e) => core_exit_code(e),
        }
    }
}

pub fn core_exit_code(e: &Error) -> u8 {
    match e {
        Error::NotInClosure { .. } => exit::NOT_IN_CLOSURE,
        Error::FactorizationNoConvergence { .. } => exit::NO_CONVERGENCE,
        Error::RankTooHighForDensity { .. } => exit::RANK_TOO_HIGH,
        Error::InvalidDescriptor(_)
        | Error::InvalidElement(_)
        | Error::InvalidPath(_)
        | Error::InvalidRational(_)
        | Error::InconsistentFlags(_)
        | Error::RankMismatch { .. }
        | Error::DescriptorMismatch { .. } => exit::PARSE,
        _ => exit::NUMERIC,
    }
}

//! Command-line front end for psmo-core: model files, strategy files and subcommands.

pub mod cli;
pub mod model;
pub mod strategy;

use psmo_core::encode::EncodeError;
use psmo_core::exact::ExactError;
use psmo_core::gen::GenError;
use psmo_core::mdp::MdpError;
use psmo_core::memory::MemoryError;
use psmo_core::milp::MilpError;
use psmo_core::pareto::ParetoError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("time limit reached")]
    Timeout,
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Encode(EncodeError),
    #[error(transparent)]
    Memory(MemoryError),
    #[error(transparent)]
    Pareto(ParetoError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Gen(#[from] GenError),
}

fn stopped(e: &EncodeError) -> bool {
    matches!(e, EncodeError::Milp(MilpError::Stopped))
}

impl From<EncodeError> for CliError {
    fn from(e: EncodeError) -> Self {
        if stopped(&e) {
            CliError::Timeout
        } else {
            CliError::Encode(e)
        }
    }
}

impl From<MemoryError> for CliError {
    fn from(e: MemoryError) -> Self {
        match e {
            MemoryError::Encode(e) => e.into(),
            MemoryError::Mdp(e) => e.into(),
            e => CliError::Memory(e),
        }
    }
}

impl From<ParetoError> for CliError {
    fn from(e: ParetoError) -> Self {
        match e {
            ParetoError::Encode(e) => e.into(),
            ParetoError::Mdp(e) => e.into(),
            e => CliError::Pareto(e),
        }
    }
}

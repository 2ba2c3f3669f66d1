//! Command-line front end: scenario files, solve and pre-scan runs, CSV
//! reports, SVG renders and the closed-form calculators.

pub mod commands;
pub mod report;
pub mod scenario;
pub mod svg;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("no feasible solution: {0}")]
    NoFeasible(String),
    #[error("no candidate passed the likelihood filter: {0}")]
    NothingPassed(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::NoFeasible(_) => 3,
            CliError::NothingPassed(_) => 4,
        }
    }
}

impl From<relaynet::Error> for CliError {
    fn from(e: relaynet::Error) -> Self {
        match e {
            relaynet::Error::NoSolution(m) => CliError::NoFeasible(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

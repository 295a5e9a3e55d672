use std::fmt::Display;

use seagull_core::fib::FibError;
use seagull_core::runtime::{FileError, RuntimeError};

pub const HOLDS: u8 = 0;
pub const VIOLATED: u8 = 1;
pub const INPUT: u8 = 2;
pub const UNKNOWN_DESTINATION: u8 = 3;
pub const BUDGET_REJECTED: u8 = 4;
pub const DISAGREEMENT: u8 = 5;
pub const RUNTIME: u8 = 6;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Display) -> Self {
        CliError {
            code,
            message: message.to_string(),
        }
    }

    pub fn input(message: impl Display) -> Self {
        CliError::new(INPUT, message)
    }
}

impl From<FibError> for CliError {
    fn from(e: FibError) -> Self {
        let code = match e {
            FibError::UnknownDestination(_) => UNKNOWN_DESTINATION,
            _ => INPUT,
        };
        CliError::new(code, e)
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        CliError::input(e)
    }
}

impl From<RuntimeError> for CliError {
    fn from(e: RuntimeError) -> Self {
        let code = match e {
            RuntimeError::BudgetRejected { .. } => BUDGET_REJECTED,
            RuntimeError::Config(_)
            | RuntimeError::Ingest(_)
            | RuntimeError::InvalidQuery(_)
            | RuntimeError::NotIngested
            | RuntimeError::Files(_) => INPUT,
            _ => RUNTIME,
        };
        CliError::new(code, e)
    }
}

pub fn verdict_code(result: bool) -> u8 {
    if result {
        HOLDS
    } else {
        VIOLATED
    }
}

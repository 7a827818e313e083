//! Command implementations of the `tradediff` binary. Each function maps to
//! one subcommand; `main` only parses arguments and translates errors into
//! exit codes (1 for domain errors, 2 for usage and file errors).

pub mod commands;

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or unreadable/unparsable input files: exit code 2.
    Usage(String),
    /// The inputs parsed but the model rejected them (validation,
    /// convergence, infeasible targets): exit code 1.
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(m) => write!(f, "{m}"),
        }
    }
}

impl From<tradediff_core::io::IoFailure> for CliError {
    fn from(e: tradediff_core::io::IoFailure) -> Self {
        CliError::Usage(e.to_string())
    }
}

macro_rules! domain_from {
    ($($ty:path),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Domain(e.to_string())
            }
        })*
    };
}

domain_from!(
    tradediff_core::economy::CalibrationError,
    tradediff_core::equilibrium::SolveError,
    tradediff_core::dynamics::SimulateError,
    tradediff_core::scenario::ScenarioError,
    tradediff_core::calibration::CalibrationDataError,
    tradediff_core::diffusion::DiffusionError,
);

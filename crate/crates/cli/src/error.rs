use std::io;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, configuration values or parameters rejected by a solver.
    #[error("{0}")]
    Usage(String),
    /// A field file could not be read or decoded.
    #[error("{0}")]
    Format(String),
    /// A solver stopped before reaching its tolerance.
    #[error("{0}")]
    NotConverged(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Format(_) => ExitCode::from(2),
            CliError::NotConverged(_) => ExitCode::from(3),
            CliError::Io(_) => ExitCode::from(1),
        }
    }
}

impl From<gptw_core::field::FieldError> for CliError {
    fn from(e: gptw_core::field::FieldError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<gptw_core::functionals::ParamsError> for CliError {
    fn from(e: gptw_core::functionals::ParamsError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<gptw_core::ansatz::AnsatzError> for CliError {
    fn from(e: gptw_core::ansatz::AnsatzError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<gptw_core::minimize::MinimizeError> for CliError {
    fn from(e: gptw_core::minimize::MinimizeError) -> Self {
        use gptw_core::minimize::MinimizeError::*;
        match e {
            NonFiniteValue(_) => CliError::NotConverged(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<gptw_core::mountainpass::MountainPassError> for CliError {
    fn from(e: gptw_core::mountainpass::MountainPassError) -> Self {
        use gptw_core::mountainpass::MountainPassError::*;
        match e {
            NotConverged { .. } | NotASaddle { .. } | ActionOutOfRange { .. } => {
                CliError::NotConverged(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<gptw_core::spectrum::SpectrumError> for CliError {
    fn from(e: gptw_core::spectrum::SpectrumError) -> Self {
        use gptw_core::spectrum::SpectrumError::*;
        match e {
            NoConvergence(_) => CliError::NotConverged(e.to_string()),
            Minimize(m) => m.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

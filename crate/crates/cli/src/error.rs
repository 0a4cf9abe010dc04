use std::path::Path;
use std::process::ExitCode;

use hawkes_intraday::analytics::AnalyticsError;
use hawkes_intraday::curve::CurveError;
use hawkes_intraday::empirics::EmpiricsError;
use hawkes_intraday::estimate::EstimateError;
use hawkes_intraday::limits::LimitError;
use hawkes_intraday::simulate::SimulateError;
use hawkes_intraday::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("no ticks inside the session of {0}")]
    EmptySession(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Parse { .. }
            | CliError::EmptySession(_)
            | CliError::Data(_)
            | CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
        })
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidStream(_) => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SimulateError> for CliError {
    fn from(e: SimulateError) -> Self {
        match e {
            SimulateError::Model(m) => m.into(),
            SimulateError::SeedExhausted(_) | SimulateError::BoundViolated { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<EmpiricsError> for CliError {
    fn from(e: EmpiricsError) -> Self {
        match e {
            EmpiricsError::BadWindow(_) | EmpiricsError::EmptyGrid => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::Model(m) => m.into(),
            EstimateError::Empirics(m) => m.into(),
            EstimateError::NumericalUnderflow { .. } | EstimateError::Optimizer(_) => {
                CliError::Numerical(e.to_string())
            }
            EstimateError::EmptyWindow { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<LimitError> for CliError {
    fn from(e: LimitError) -> Self {
        match e {
            LimitError::Simulate(s) => s.into(),
            LimitError::Empirics(s) => s.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        CliError::Data(e.to_string())
    }
}

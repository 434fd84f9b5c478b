//! CLI error classification and the exit-status contract.
//!
//! 0 = success, 1 = usage or configuration error, 2 = epsilon threshold
//! unreachable, 3 = numerical failure.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, paths, file contents or configuration.
    Usage(String),
    /// No epsilon candidate pushed the error metric below tau.
    ThresholdUnreachable(String),
    /// The run itself failed numerically.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::ThresholdUnreachable(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::ThresholdUnreachable(m) => write!(f, "threshold unreachable: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<dropo_core::Error> for CliError {
    fn from(e: dropo_core::Error) -> Self {
        use dropo_core::Error as E;
        fn is_numerical(e: &E) -> bool {
            match e {
                E::NonSpdCovariance(_)
                | E::AllCandidatesNonFinite { .. }
                | E::SampleRetriesExhausted { .. }
                | E::InfeasibleTruncation { .. } => true,
                E::TransitionFailed { source, .. } => is_numerical(source),
                E::CandidateFailed { source, .. } => is_numerical(source),
                _ => false,
            }
        }
        if is_numerical(&e) {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

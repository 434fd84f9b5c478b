//! Error type shared across the crate.

use thiserror::Error;

/// Errors raised by parameter spaces, simulators, preprocessing and fitting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("trajectory too short: {states} states cannot supply a rollout of {lambda} actions (needs at least {} states)", lambda + 1)]
    TrajectoryTooShort { states: usize, lambda: usize },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid simulator parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("truncation region for '{name}' is entirely infeasible: mu + 2 sigma = {upper_edge} <= validity floor {floor}")]
    InfeasibleTruncation {
        name: String,
        upper_edge: f64,
        floor: f64,
    },

    #[error("exhausted {tries} redraws for '{name}' without a feasible value (floor {floor})")]
    SampleRetriesExhausted {
        name: String,
        tries: usize,
        floor: f64,
    },

    #[error("covariance is not positive definite: {0}")]
    NonSpdCovariance(String),

    #[error("dataset has no transitions")]
    EmptyDataset,

    #[error("likelihood failed at transition {transition}: {source}")]
    TransitionFailed {
        transition: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("spline construction failed: {0}")]
    InvalidKnots(String),

    #[error("evaluation point {x} outside knot range [{lo}, {hi}]")]
    OutsideKnotRange { x: f64, lo: f64, hi: f64 },

    #[error("sensor channels share no common time window of length >= 2 dt")]
    NoCommonWindow,

    #[error("quaternion has (near-)zero norm {0}")]
    ZeroNormQuaternion(f64),

    #[error("degenerate normalization bounds for '{name}': lower {lower} == upper {upper}")]
    DegenerateBounds { name: String, lower: f64, upper: f64 },

    #[error("optimizer aborted: every candidate of generation {generation} returned a non-finite objective{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    AllCandidatesNonFinite {
        generation: usize,
        context: Option<String>,
    },

    #[error("objective evaluation failed for candidate {candidate:?}: {source}")]
    CandidateFailed {
        candidate: Vec<f64>,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

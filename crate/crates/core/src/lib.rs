//! Fits domain-randomization distributions over physics parameters to a
//! fixed offline dataset of state-action trajectories.
//!
//! The pipeline: slice recorded trajectories into `(s_t, a_{t..t+lambda-1},
//! s_{t+lambda})` transitions, replay each action window through a
//! deterministic simulator under `K` dynamics vectors drawn from a candidate
//! distribution, fit a Gaussian to the replayed next states, and score the
//! recorded next state under it. A gradient-free optimizer adjusts the
//! per-parameter means and standard deviations to maximize the summed
//! log-likelihood. A diagonal regularizer `epsilon` absorbs observation
//! noise; its magnitude is picked as the smallest value whose converged
//! squared replay error stays below a threshold `tau`.
//!
//! The crate also ships preprocessing for raw sensor logs (synchronization,
//! Akima-spline resampling, spline-derivative velocities, quaternion angle
//! residuals), three closed-form toy simulators for end-to-end experiments,
//! and a means-only L2 baseline for comparison.

pub mod dataset;
pub mod error;
pub mod likelihood;
pub mod optimize;
pub mod params;
pub mod preprocess;
pub mod rng;
pub mod sim;

pub use dataset::{extract_transitions, extract_transitions_multi, Trajectory, TransitionDataset};
pub use error::{Error, Result};
pub use likelihood::{
    dataset_log_likelihood, dataset_mse, next_state_stats, point_replay_mse, sample_dynamics,
    transition_log_likelihood, LikelihoodConfig, NextStateStats,
};
pub use optimize::{
    cmaes_minimize, fit, fit_dropo, fit_droid_baseline, tune_epsilon, CmaesOptions, FitConfig,
    FitResult, ObjectiveKind, TuneOutcome,
};
pub use params::{DynamicsDistribution, DynamicsSample, ParameterSpace, DEFAULT_STD_MIN};
pub use sim::{
    generate_dataset, inject_misspecification, DataGenConfig, ExcitationKind, GeneratedData,
    GroundTruth, MassChain3, MassSpringDamper, Simulator, SlidingPuck2D, XiDraw,
};

//! Gradient-free fitting of dynamics distributions: search-space
//! normalization, the CMA-ES engine, and the fitting/tuning drivers.

mod cmaes;
mod fit;
mod normalize;

pub use cmaes::{cmaes_minimize, CmaesOptions, CmaesOutcome, StopReason};
pub use fit::{
    fit, fit_dropo, fit_droid_baseline, tune_epsilon, EpsilonSweepRow, FitConfig, FitResult,
    ObjectiveKind, TuneOutcome,
};
pub use normalize::{
    denormalize_means, denormalize_phi, normalize_means, normalize_phi, NormalizedPhi, BOX_HIGH,
};

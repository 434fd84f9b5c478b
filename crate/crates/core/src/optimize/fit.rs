//! Fitting drivers: likelihood maximization over distributions, the
//! means-only squared-error baseline, and the epsilon selection sweep.

use std::cell::RefCell;

use crate::dataset::TransitionDataset;
use crate::error::{Error, Result};
use crate::likelihood::{dataset_score, point_replay_mse, LikelihoodConfig};
use crate::optimize::cmaes::{cmaes_minimize, CmaesOptions};
use crate::optimize::normalize::{
    denormalize_means, denormalize_phi, normalize_means, normalize_phi,
};
use crate::params::{DynamicsDistribution, DynamicsSample};
use crate::sim::Simulator;

/// Which objective drives the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// Maximize the sampled-simulation Gaussian log-likelihood over means
    /// and stds (2d search dimensions).
    DropoLogLikelihood,
    /// Minimize the summed squared replay error over means only
    /// (d search dimensions); spreads are read off the optimizer.
    DroidL2,
}

/// Everything a fit run needs besides the data and the simulator.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub objective: ObjectiveKind,
    /// Maximum objective evaluations.
    pub budget: usize,
    /// Stagnation stop: window in generations and improvement threshold;
    /// zero disables.
    pub stagnation_window: usize,
    pub stagnation_tol: f64,
    /// Population override for the optimizer.
    pub population: Option<usize>,
    pub likelihood: LikelihoodConfig,
    /// Starting guess `(means, stds)`. Defaults to search-interval
    /// midpoints and the geometric mean of the std bounds.
    pub phi_init: Option<(Vec<f64>, Vec<f64>)>,
}

impl FitConfig {
    pub fn new(objective: ObjectiveKind, budget: usize, likelihood: LikelihoodConfig) -> Self {
        Self {
            objective,
            budget,
            stagnation_window: 20,
            stagnation_tol: 1e-8,
            population: None,
            likelihood,
            phi_init: None,
        }
    }

    fn check(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be positive".into()));
        }
        Ok(())
    }
}

/// Converged distribution plus how the run got there.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub phi_star: DynamicsDistribution,
    /// Best-so-far value of the minimized objective after each generation
    /// (negated log-likelihood or summed squared error); non-increasing.
    pub objective_trace: Vec<f64>,
    /// Squared-error metric of the best-so-far candidate per generation,
    /// aligned with `objective_trace`.
    pub mse_trace: Vec<f64>,
    /// Squared-error metric of the converged distribution on the dataset.
    pub mse: f64,
    pub epsilon: Vec<f64>,
    pub evaluations: usize,
    pub seed: u64,
}

fn initial_guess(
    cfg: &FitConfig,
    space: &crate::params::ParameterSpace,
) -> Result<DynamicsDistribution> {
    match &cfg.phi_init {
        Some((mean, std)) => {
            DynamicsDistribution::new(space.clone(), mean.clone(), std.clone())
        }
        None => {
            let mean = space
                .lower()
                .iter()
                .zip(space.upper())
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect();
            let std = space
                .std_max()
                .iter()
                .map(|hi| (space.std_min() * hi).sqrt())
                .collect();
            DynamicsDistribution::new(space.clone(), mean, std)
        }
    }
}

fn cmaes_options(cfg: &FitConfig) -> CmaesOptions {
    CmaesOptions {
        budget: cfg.budget,
        stagnation_window: cfg.stagnation_window,
        stagnation_tol: cfg.stagnation_tol,
        population: cfg.population,
        bounds: Some((0.0, crate::optimize::normalize::BOX_HIGH)),
        seed: cfg.likelihood.seed,
    }
}

fn attach_candidate_context(
    err: Error,
    last_failure: RefCell<Option<(Vec<f64>, Error)>>,
) -> Error {
    match (err, last_failure.into_inner()) {
        (Error::AllCandidatesNonFinite { generation, .. }, Some((candidate, source))) => {
            Error::AllCandidatesNonFinite {
                generation,
                context: Some(format!(
                    "last failing candidate {candidate:?}: {source}"
                )),
            }
        }
        (err, _) => err,
    }
}

/// Stream key reserved for the final arbitration pass; optimizer
/// generations can never reach it.
const FINAL_SELECTION_STREAM: u64 = u64::MAX;

/// Fits the distribution by maximizing the dataset log-likelihood with the
/// gradient-free optimizer in normalized coordinates.
///
/// Candidates within one optimizer generation share the dynamics-sampling
/// stream (keyed by `(seed, generation)`), so their scores differ only
/// through the candidates themselves and selection stays informative even
/// when the Monte Carlo noise of independent draws would drown the
/// objective differences. The sample set is refreshed every generation.
/// After the search, the best-so-far point and the final distribution mean
/// are compared once more under a common fresh stream; the winner is
/// returned. The whole procedure replays bit-exactly from the seed.
pub fn fit_dropo(
    dataset: &TransitionDataset,
    sim: &dyn Simulator,
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.check()?;
    let space = sim.param_space().clone();
    let phi_init = initial_guess(cfg, &space)?;
    let z0 = normalize_phi(&phi_init, &space)?;

    let population = cfg
        .population
        .unwrap_or_else(|| crate::optimize::cmaes::default_population(z0.z.len()))
        as u64;
    let eval_counter = RefCell::new(0u64);
    let gen_log: RefCell<Vec<(f64, f64)>> = RefCell::new(Vec::new());
    let last_failure: RefCell<Option<(Vec<f64>, Error)>> = RefCell::new(None);

    let objective = |z: &[f64]| -> f64 {
        let generation = {
            let mut c = eval_counter.borrow_mut();
            let i = *c;
            *c += 1;
            (i / population) as usize
        };
        let phi = match denormalize_phi(z, &space) {
            Ok(phi) => phi,
            Err(e) => {
                *last_failure.borrow_mut() = Some((z.to_vec(), e));
                return f64::INFINITY;
            }
        };
        match dataset_score(&phi, dataset, sim, &cfg.likelihood, generation as u64) {
            Ok(score) => {
                let f = -score.log_likelihood;
                let mut log = gen_log.borrow_mut();
                while log.len() <= generation {
                    let carry = log.last().copied().unwrap_or((f64::INFINITY, f64::NAN));
                    log.push(carry);
                }
                if f < log[generation].0 {
                    log[generation] = (f, score.mse);
                }
                f
            }
            Err(e) => {
                *last_failure.borrow_mut() = Some((z.to_vec(), e));
                f64::INFINITY
            }
        }
    };

    let outcome = cmaes_minimize(objective, &z0.z, 1.0, &cmaes_options(cfg))
        .map_err(|e| attach_candidate_context(e, last_failure))?;

    // arbitration: score the noisy best-so-far sample and the converged
    // distribution mean under one shared stream and keep the better point
    let mut z_star = outcome.x_best.clone();
    let mut extra_evals = 0usize;
    let score_at = |z: &[f64]| -> Result<crate::likelihood::DatasetScore> {
        dataset_score(
            &denormalize_phi(z, &space)?,
            dataset,
            sim,
            &cfg.likelihood,
            FINAL_SELECTION_STREAM,
        )
    };
    let mut final_score = score_at(&z_star)?;
    extra_evals += 1;
    if outcome.final_mean != outcome.x_best {
        let mean_score = score_at(&outcome.final_mean)?;
        extra_evals += 1;
        if -mean_score.log_likelihood < -final_score.log_likelihood {
            z_star = outcome.final_mean.clone();
            final_score = mean_score;
        }
    }

    let mut mse_trace: Vec<f64> = gen_log.into_inner().iter().map(|(_, mse)| *mse).collect();
    mse_trace.truncate(outcome.trace.len());
    Ok(FitResult {
        phi_star: denormalize_phi(&z_star, &space)?,
        objective_trace: outcome.trace,
        mse_trace,
        mse: final_score.mse,
        epsilon: cfg.likelihood.epsilon.clone(),
        evaluations: outcome.evaluations + extra_evals,
        seed: cfg.likelihood.seed,
    })
}

/// Means-only baseline: minimizes the summed squared error of a single
/// deterministic replay per transition.
///
/// The reported stds are not optimized; they are the optimizer's final
/// per-coordinate marginal spread mapped through the mean normalization
/// scale, and routinely sit far below the sampling floor. They describe
/// search convergence, not inferred parameter variability.
pub fn fit_droid_baseline(
    dataset: &TransitionDataset,
    sim: &dyn Simulator,
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.check()?;
    let space = sim.param_space().clone();
    let phi_init = initial_guess(cfg, &space)?;
    let z0 = normalize_means(phi_init.mean(), &space)?;

    let last_failure: RefCell<Option<(Vec<f64>, Error)>> = RefCell::new(None);
    let objective = |z: &[f64]| -> f64 {
        let means = match denormalize_means(z, &space) {
            Ok(m) => m,
            Err(e) => {
                *last_failure.borrow_mut() = Some((z.to_vec(), e));
                return f64::INFINITY;
            }
        };
        match point_replay_mse(&DynamicsSample::new(means), dataset, sim) {
            Ok(per_transition) => per_transition.iter().sum(),
            Err(e) => {
                *last_failure.borrow_mut() = Some((z.to_vec(), e));
                f64::INFINITY
            }
        }
    };

    let outcome = cmaes_minimize(objective, &z0, 1.0, &cmaes_options(cfg))
        .map_err(|e| attach_candidate_context(e, last_failure))?;

    let means = denormalize_means(&outcome.x_best, &space)?;
    let std = outcome
        .final_marginal_std
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s * (space.upper()[i] - space.lower()[i]) / crate::optimize::normalize::BOX_HIGH
        })
        .collect();
    Ok(FitResult {
        phi_star: DynamicsDistribution::new(space, means, std)?,
        mse_trace: outcome.trace.clone(),
        objective_trace: outcome.trace,
        mse: outcome.f_best,
        epsilon: cfg.likelihood.epsilon.clone(),
        evaluations: outcome.evaluations,
        seed: cfg.likelihood.seed,
    })
}

/// Runs the configured objective.
pub fn fit(
    dataset: &TransitionDataset,
    sim: &dyn Simulator,
    cfg: &FitConfig,
) -> Result<FitResult> {
    match cfg.objective {
        ObjectiveKind::DropoLogLikelihood => fit_dropo(dataset, sim, cfg),
        ObjectiveKind::DroidL2 => fit_droid_baseline(dataset, sim, cfg),
    }
}

/// One row of the epsilon sweep table, plot-ready.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSweepRow {
    pub epsilon: f64,
    /// Sum of converged per-parameter variances.
    pub total_variance: f64,
    pub mse: f64,
}

/// Result of the epsilon selection sweep. `selected` indexes into `rows`
/// and `fits`; `None` means no candidate pushed the squared error below the
/// threshold and the caller should surface "threshold unreachable" together
/// with the table.
#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub selected: Option<usize>,
    pub rows: Vec<EpsilonSweepRow>,
    pub fits: Vec<FitResult>,
    pub tau: f64,
}

impl TuneOutcome {
    pub fn selected_fit(&self) -> Option<&FitResult> {
        self.selected.map(|i| &self.fits[i])
    }
}

/// Fits once per candidate epsilon and selects the smallest candidate whose
/// converged squared error falls below `tau`.
///
/// Every candidate is evaluated even after one qualifies, because the sweep
/// table itself is a deliverable (total variance and error per epsilon).
pub fn tune_epsilon(
    dataset: &TransitionDataset,
    sim: &dyn Simulator,
    cfg: &FitConfig,
    candidates: &[f64],
    tau: f64,
) -> Result<TuneOutcome> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no epsilon candidates supplied".into()));
    }
    if candidates.iter().any(|e| *e < 0.0 || !e.is_finite()) {
        return Err(Error::InvalidConfig(
            "epsilon candidates must be finite and non-negative".into(),
        ));
    }
    if !(tau >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "tau must be non-negative, got {tau}"
        )));
    }

    let mut rows = Vec::with_capacity(candidates.len());
    let mut fits = Vec::with_capacity(candidates.len());
    for &eps in candidates {
        let mut run_cfg = cfg.clone();
        run_cfg.objective = ObjectiveKind::DropoLogLikelihood;
        run_cfg.likelihood.epsilon = vec![eps; dataset.state_dim];
        let fit = fit_dropo(dataset, sim, &run_cfg)?;
        rows.push(EpsilonSweepRow {
            epsilon: eps,
            total_variance: fit.phi_star.total_variance(),
            mse: fit.mse,
        });
        fits.push(fit);
    }

    let selected = rows
        .iter()
        .enumerate()
        .filter(|(_, row)| row.mse < tau)
        .min_by(|(_, a), (_, b)| a.epsilon.partial_cmp(&b.epsilon).unwrap())
        .map(|(i, _)| i);

    Ok(TuneOutcome {
        selected,
        rows,
        fits,
        tau,
    })
}

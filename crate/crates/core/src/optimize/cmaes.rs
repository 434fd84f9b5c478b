//! Self-contained (mu/mu_w, lambda)-CMA-ES minimizer.
//!
//! Standard strategy parameters: default population `4 + floor(3 ln n)`,
//! log-weighted recombination, cumulative step-size adaptation, rank-one
//! plus rank-mu covariance updates. Runs are fully determined by the seed.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{derive_rng, stream};

/// Attempts to draw an in-bounds candidate before falling back to clamping.
const MAX_BOUND_RESAMPLES: usize = 100;
/// Weight of the quadratic penalty applied to clamped candidates.
const CLAMP_PENALTY: f64 = 1e4;

#[derive(Debug, Clone)]
pub struct CmaesOptions {
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// Stop when the best objective improved by less than
    /// `stagnation_tol` over this many consecutive generations.
    /// A window or tolerance of zero disables the check.
    pub stagnation_window: usize,
    pub stagnation_tol: f64,
    /// Population size override; `None` uses `4 + floor(3 ln n)`.
    pub population: Option<usize>,
    /// Uniform box applied to every coordinate. Candidates outside are
    /// redrawn, then clamped with a quadratic penalty as a last resort.
    pub bounds: Option<(f64, f64)>,
    pub seed: u64,
}

impl CmaesOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            stagnation_window: 20,
            stagnation_tol: 1e-8,
            population: None,
            bounds: None,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    BudgetExhausted,
    Stagnation,
}

/// Result of a run, including the per-coordinate marginal spread of the
/// final search distribution (`sigma * sqrt(diag C)`), which means-only
/// baselines report as their converged standard deviation.
#[derive(Debug, Clone)]
pub struct CmaesOutcome {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    /// Best-so-far objective value after each generation (non-increasing).
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub generations: usize,
    /// Final mean of the search distribution. Under a noisy objective it is
    /// often a better point than the noise-tainted best-so-far sample.
    pub final_mean: Vec<f64>,
    pub final_step_size: f64,
    pub final_marginal_std: Vec<f64>,
    pub stop: StopReason,
}

/// Default population size for an `n`-dimensional search.
pub fn default_population(dim: usize) -> usize {
    4 + (3.0 * (dim as f64).ln()).floor() as usize
}

/// Strategy constants fixed at startup.
struct Strategy {
    n: f64,
    lambda: usize,
    mu: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
}

impl Strategy {
    fn new(dim: usize, population: Option<usize>) -> Self {
        let n = dim as f64;
        let lambda = population.unwrap_or_else(|| default_population(dim));
        let mu = lambda / 2;
        let raw: Vec<f64> = (0..mu)
            .map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.into_iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu =
            (2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff)).min(1.0 - c_1);
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Self {
            n,
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

/// Eigendecomposition of C with eigenvalues floored away from zero, giving
/// the sampling transform `B diag(sqrt(eig))` and the whitening transform
/// `B diag(1/sqrt(eig)) B^T`.
struct EigenBasis {
    vectors: DMatrix<f64>,
    sqrt_eig: DVector<f64>,
}

impl EigenBasis {
    fn of(cov: &DMatrix<f64>) -> Self {
        let eigen = nalgebra::SymmetricEigen::new(cov.clone());
        let max_eig = eigen.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let floor = (max_eig * 1e-14).max(1e-30);
        let sqrt_eig = eigen.eigenvalues.map(|v| v.max(floor).sqrt());
        Self {
            vectors: eigen.eigenvectors,
            sqrt_eig,
        }
    }

    fn sample_direction(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.vectors * z.component_mul(&self.sqrt_eig)
    }

    fn whiten(&self, y: &DVector<f64>) -> DVector<f64> {
        let projected = self.vectors.transpose() * y;
        &self.vectors * projected.component_div(&self.sqrt_eig)
    }
}

/// Minimizes `objective` starting from `x0` with initial step size
/// `sigma0`. Candidates yielding non-finite objectives are discarded from
/// recombination; a generation consisting solely of them aborts the run.
pub fn cmaes_minimize(
    mut objective: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    sigma0: f64,
    options: &CmaesOptions,
) -> Result<CmaesOutcome> {
    let dim = x0.len();
    if dim == 0 {
        return Err(Error::InvalidConfig("optimizer needs n >= 1".into()));
    }
    if !(sigma0 > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "initial step size must be positive, got {sigma0}"
        )));
    }
    let strategy = Strategy::new(dim, options.population);
    if options.budget < strategy.lambda {
        return Err(Error::InvalidConfig(format!(
            "budget {} is below one population of {}",
            options.budget, strategy.lambda
        )));
    }
    if let Some((lo, hi)) = options.bounds {
        if !(lo < hi) {
            return Err(Error::InvalidConfig(format!(
                "invalid bounds [{lo}, {hi}]"
            )));
        }
    }

    let mut rng = derive_rng(options.seed, &[stream::CMAES]);
    let mut mean = DVector::from_column_slice(x0);
    let mut sigma = sigma0;
    let mut cov = DMatrix::<f64>::identity(dim, dim);
    let mut p_sigma = DVector::<f64>::zeros(dim);
    let mut p_c = DVector::<f64>::zeros(dim);

    let mut evaluations = 0usize;
    let mut generation = 0usize;
    let mut trace: Vec<f64> = Vec::new();
    let mut best_f = f64::INFINITY;
    let mut best_x = mean.clone();
    let mut stop = StopReason::BudgetExhausted;

    let in_box = |x: &DVector<f64>, lo: f64, hi: f64| x.iter().all(|&v| v >= lo && v <= hi);

    while evaluations + strategy.lambda <= options.budget {
        let basis = EigenBasis::of(&cov);

        let mut candidates: Vec<(DVector<f64>, DVector<f64>, f64)> =
            Vec::with_capacity(strategy.lambda);
        for _ in 0..strategy.lambda {
            let mut x;
            let mut penalty = 0.0;
            let mut attempts = 0;
            loop {
                let z = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                let y = basis.sample_direction(&z);
                x = &mean + sigma * y;
                match options.bounds {
                    Some((lo, hi)) if !in_box(&x, lo, hi) => {
                        attempts += 1;
                        if attempts >= MAX_BOUND_RESAMPLES {
                            let clamped = x.map(|v| v.clamp(lo, hi));
                            penalty = CLAMP_PENALTY * (&x - &clamped).norm_squared();
                            x = clamped;
                            break;
                        }
                    }
                    _ => break,
                }
            }
            let f = objective(x.as_slice()) + penalty;
            evaluations += 1;
            let y = (&x - &mean) / sigma;
            candidates.push((x, y, f));
        }

        if candidates.iter().all(|(_, _, f)| !f.is_finite()) {
            return Err(Error::AllCandidatesNonFinite {
                generation,
                context: None,
            });
        }
        candidates.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap_or(std::cmp::Ordering::Equal));

        if candidates[0].2 < best_f {
            best_f = candidates[0].2;
            best_x = candidates[0].0.clone();
        }

        // weighted recombination over the mu best
        let mut y_w = DVector::<f64>::zeros(dim);
        for (i, w) in strategy.weights.iter().enumerate().take(strategy.mu) {
            y_w += *w * &candidates[i].1;
        }
        mean += sigma * &y_w;

        // cumulative step-size adaptation
        let whitened = basis.whiten(&y_w);
        p_sigma = (1.0 - strategy.c_sigma) * &p_sigma
            + (strategy.c_sigma * (2.0 - strategy.c_sigma) * strategy.mu_eff).sqrt() * whitened;
        let ps_norm = p_sigma.norm();
        let expected_decay =
            (1.0 - (1.0 - strategy.c_sigma).powi(2 * (generation as i32 + 1))).sqrt();
        let h_sigma = if ps_norm / expected_decay
            < (1.4 + 2.0 / (strategy.n + 1.0)) * strategy.chi_n
        {
            1.0
        } else {
            0.0
        };

        p_c = (1.0 - strategy.c_c) * &p_c
            + h_sigma * (strategy.c_c * (2.0 - strategy.c_c) * strategy.mu_eff).sqrt() * &y_w;

        // rank-one + rank-mu covariance update
        let delta_h = (1.0 - h_sigma) * strategy.c_c * (2.0 - strategy.c_c);
        let mut rank_mu = DMatrix::<f64>::zeros(dim, dim);
        for (i, w) in strategy.weights.iter().enumerate().take(strategy.mu) {
            let y = &candidates[i].1;
            rank_mu += *w * y * y.transpose();
        }
        cov = (1.0 - strategy.c_1 - strategy.c_mu + strategy.c_1 * delta_h) * &cov
            + strategy.c_1 * (&p_c * p_c.transpose())
            + strategy.c_mu * rank_mu;
        cov = (&cov + cov.transpose()) * 0.5;
        // factorization check each update: late in a run the adapted
        // covariance can degenerate numerically; repair by flooring its
        // eigenvalues so the matrix stays positive definite
        if Cholesky::new(cov.clone()).is_none() {
            let eigen = nalgebra::SymmetricEigen::new(cov.clone());
            let max_eig = eigen.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
            let floor = (max_eig * 1e-12).max(1e-300);
            let rebuilt = &eigen.eigenvectors
                * DMatrix::from_diagonal(&eigen.eigenvalues.map(|v| v.max(floor)))
                * eigen.eigenvectors.transpose();
            cov = (&rebuilt + rebuilt.transpose()) * 0.5;
        }

        sigma *= ((strategy.c_sigma / strategy.d_sigma) * (ps_norm / strategy.chi_n - 1.0)).exp();
        // keep the step size away from denormals and overflow
        sigma = sigma.clamp(1e-250, 1e250);

        generation += 1;
        trace.push(best_f);

        if options.stagnation_window > 0
            && options.stagnation_tol > 0.0
            && trace.len() > options.stagnation_window
        {
            let before = trace[trace.len() - 1 - options.stagnation_window];
            if before - best_f < options.stagnation_tol {
                stop = StopReason::Stagnation;
                break;
            }
        }
    }

    let final_marginal_std = (0..dim).map(|i| sigma * cov[(i, i)].sqrt()).collect();
    Ok(CmaesOutcome {
        x_best: best_x.as_slice().to_vec(),
        f_best: best_f,
        trace,
        evaluations,
        generations: generation,
        final_mean: mean.as_slice().to_vec(),
        final_step_size: sigma,
        final_marginal_std,
        stop,
    })
}

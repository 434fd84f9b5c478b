//! Structured outputs: fit results, ground-truth sidecars, trace and sweep
//! CSVs. All files are plain text with deterministic field order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dropo_core::sim::XiDraw;
use dropo_core::FitResult;

use crate::config::RunConfig;
use crate::errors::{CliError, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterEntry {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

/// The on-disk result document. Re-running the tool with the echoed config
/// (and its seed) reproduces the distribution bitwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub tool_version: String,
    pub objective: String,
    pub seed: u64,
    pub epsilon: Vec<f64>,
    /// Squared-error metric of the converged distribution (a sum over
    /// transitions) and its per-transition average.
    pub mse: f64,
    pub mse_per_transition: f64,
    pub evaluations: usize,
    /// File name of the objective-trace CSV written next to this document.
    pub trace_file: String,
    pub parameters: Vec<ParameterEntry>,
    pub config: RunConfig,
}

impl ResultFile {
    pub fn from_fit(
        fit: &FitResult,
        objective: &str,
        transitions: usize,
        trace_file: String,
        config: RunConfig,
    ) -> Self {
        let parameters = fit
            .phi_star
            .space()
            .names()
            .iter()
            .zip(fit.phi_star.mean().iter().zip(fit.phi_star.std()))
            .map(|(name, (mean, std))| ParameterEntry {
                name: name.clone(),
                mean: *mean,
                std: *std,
            })
            .collect();
        ResultFile {
            tool_version: TOOL_VERSION.to_string(),
            objective: objective.to_string(),
            seed: fit.seed,
            epsilon: fit.epsilon.clone(),
            mse: fit.mse,
            mse_per_transition: fit.mse / transitions as f64,
            evaluations: fit.evaluations,
            trace_file,
            parameters,
            config,
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = toml::to_string(self).expect("result serializes");
        std::fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn means(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.mean).collect()
    }
}

/// Best objective and squared error per optimizer generation. For the
/// likelihood objective the first value column is the best log-likelihood
/// (the optimizer minimizes its negation); for the squared-error baseline
/// it is the objective itself.
pub fn write_trace_csv(path: &Path, fit: &FitResult, likelihood_objective: bool) -> CliResult<()> {
    let mut out = String::new();
    if likelihood_objective {
        out.push_str("generation,best_log_likelihood,mse\n");
        for (g, (obj, mse)) in fit.objective_trace.iter().zip(&fit.mse_trace).enumerate() {
            let _ = writeln!(out, "{g},{},{mse}", -obj);
        }
    } else {
        out.push_str("generation,best_objective,mse\n");
        for (g, (obj, mse)) in fit.objective_trace.iter().zip(&fit.mse_trace).enumerate() {
            let _ = writeln!(out, "{g},{obj},{mse}");
        }
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

/// The epsilon sweep table backing threshold selection plots.
pub fn write_sweep_csv(
    path: &Path,
    rows: &[dropo_core::optimize::EpsilonSweepRow],
) -> CliResult<()> {
    let mut out = String::from("epsilon,total_variance,mse\n");
    for row in rows {
        let _ = writeln!(out, "{},{},{}", row.epsilon, row.total_variance, row.mse);
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

/// Ground-truth record written next to generated datasets so tests and
/// replay tooling can check against the exact dynamics draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub tool_version: String,
    pub seed: u64,
    pub noise_std: Vec<f64>,
    pub parameter_names: Vec<String>,
    pub draws: Vec<TruthDraw>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthDraw {
    pub episode: usize,
    pub start_transition: usize,
    pub values: Vec<f64>,
}

impl TruthFile {
    pub fn new(seed: u64, noise_std: Vec<f64>, names: Vec<String>, draws: &[XiDraw]) -> Self {
        TruthFile {
            tool_version: TOOL_VERSION.to_string(),
            seed,
            noise_std,
            parameter_names: names,
            draws: draws
                .iter()
                .map(|d| TruthDraw {
                    episode: d.episode,
                    start_transition: d.start_transition,
                    values: d.values.clone(),
                })
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = toml::to_string(self).expect("truth serializes");
        std::fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

/// `<path>` with an extra suffix appended to the file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// Per-episode trajectory path: the plain `--out` path for a single
/// episode, `<stem>_ep<i><ext>` for several.
pub fn episode_path(out: &Path, episode: usize, episodes: usize) -> PathBuf {
    if episodes == 1 {
        return out.to_path_buf();
    }
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    out.with_file_name(format!("{stem}_ep{episode}{ext}"))
}

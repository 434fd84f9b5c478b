//! Run configuration: a strict human-readable key/value tree.
//!
//! Unknown keys are rejected everywhere, and every referenced channel or
//! parameter must exist. The parsed tree is echoed verbatim into result
//! files so a run can be reproduced from its own output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use dropo_core::preprocess::ChannelRole;
use dropo_core::sim::{
    inject_misspecification, DataGenConfig, ExcitationKind, GroundTruth, MassChain3,
    MassSpringDamper, Simulator, SlidingPuck2D,
};
use dropo_core::{
    DynamicsDistribution, DynamicsSample, FitConfig, LikelihoodConfig, ObjectiveKind,
    ParameterSpace, DEFAULT_STD_MIN,
};

use crate::errors::{CliError, CliResult};

/// A value that may be written as a scalar (broadcast) or a full vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    pub fn broadcast(&self, dim: usize, what: &str) -> CliResult<Vec<f64>> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(vec![*v; dim]),
            ScalarOrVec::Vec(v) if v.len() == dim => Ok(v.clone()),
            ScalarOrVec::Vec(v) => Err(CliError::usage(format!(
                "{what} has {} entries, expected {dim}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulatorSection {
    /// One of `mass_spring_damper`, `sliding_puck`, `mass_chain`.
    pub id: String,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Freeze one chain mass at a (possibly wrong) value, removing it from
    /// the optimizable space. `mass_chain` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_mass_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_mass_value: Option<f64>,
}

fn default_dt() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity_lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_max: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatagenSection {
    pub ground_truth_mean: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_std: Option<Vec<f64>>,
    #[serde(default)]
    pub resample_every: usize,
    /// `chirp` or `pulses`.
    pub excitation: String,
    #[serde(default = "zero_noise")]
    pub noise_std: ScalarOrVec,
    pub transitions: usize,
    #[serde(default = "one")]
    pub episodes: usize,
    pub seed: u64,
}

fn zero_noise() -> ScalarOrVec {
    ScalarOrVec::Scalar(0.0)
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LikelihoodSection {
    pub k: usize,
    pub lambda: usize,
    pub epsilon: ScalarOrVec,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orientation_slots: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    /// `dropo` or `droid`.
    pub objective: String,
    pub budget: usize,
    #[serde(default = "default_stagnation_window")]
    pub stagnation_window: usize,
    #[serde(default = "default_stagnation_tol")]
    pub stagnation_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_init_mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_init_std: Option<Vec<f64>>,
}

fn default_stagnation_window() -> usize {
    20
}

fn default_stagnation_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub name: String,
    /// `position`, `quaternion` or `action`.
    pub role: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    pub dt: f64,
    /// Per-channel time shifts in seconds.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub offsets: BTreeMap<String, f64>,
    pub channels: Vec<ChannelSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSection {
    pub epsilon_candidates: Vec<f64>,
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub simulator: SimulatorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datagen: Option<DatagenSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likelihood: Option<LikelihoodSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess: Option<PreprocessSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningSection>,
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("config parse error: {e}")))
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies command-line overrides on top of the parsed file.
    pub fn apply_overrides(&mut self, seed: Option<u64>, objective: Option<&str>) {
        if let Some(seed) = seed {
            if let Some(dg) = &mut self.datagen {
                dg.seed = seed;
            }
            if let Some(lk) = &mut self.likelihood {
                lk.seed = seed;
            }
        }
        if let Some(objective) = objective {
            if let Some(opt) = &mut self.optimizer {
                opt.objective = objective.to_string();
            }
        }
    }

    /// Builds the simulator with any space override and frozen mass applied.
    pub fn build_simulator(&self) -> CliResult<Box<dyn Simulator>> {
        let dt = self.simulator.dt;
        if !(dt > 0.0) {
            return Err(CliError::usage(format!("simulator dt must be positive, got {dt}")));
        }
        let frozen = match (
            self.simulator.frozen_mass_index,
            self.simulator.frozen_mass_value,
        ) {
            (Some(i), Some(v)) => Some((i, v)),
            (None, None) => None,
            _ => {
                return Err(CliError::usage(
                    "frozen_mass_index and frozen_mass_value must be given together",
                ))
            }
        };
        let sim: Box<dyn Simulator> = match self.simulator.id.as_str() {
            "mass_spring_damper" => {
                let base = MassSpringDamper::new(dt);
                let space = self.override_space(base.param_space())?;
                Box::new(MassSpringDamper::with_space(dt, space))
            }
            "sliding_puck" => {
                let base = SlidingPuck2D::new(dt);
                let space = self.override_space(base.param_space())?;
                Box::new(SlidingPuck2D::with_space(dt, space))
            }
            "mass_chain" => {
                let base = MassChain3::new(dt);
                let space = self.override_space(base.param_space())?;
                let full = MassChain3::with_space(dt, space);
                match frozen {
                    Some((i, v)) => Box::new(inject_misspecification(&full, i, v)?),
                    None => Box::new(full),
                }
            }
            other => {
                return Err(CliError::usage(format!(
                    "unknown simulator id '{other}' (expected mass_spring_damper, sliding_puck or mass_chain)"
                )))
            }
        };
        if frozen.is_some() && self.simulator.id != "mass_chain" {
            return Err(CliError::usage(
                "frozen mass overrides only apply to mass_chain",
            ));
        }
        Ok(sim)
    }

    fn override_space(&self, default: &ParameterSpace) -> CliResult<ParameterSpace> {
        let Some(section) = &self.space else {
            return Ok(default.clone());
        };
        if section.names != default.names() {
            return Err(CliError::usage(format!(
                "space names {:?} must match the simulator parameters {:?}",
                section.names,
                default.names()
            )));
        }
        let validity = section
            .validity_lower
            .clone()
            .unwrap_or_else(|| default.validity_lower().to_vec());
        Ok(ParameterSpace::new(
            section.names.clone(),
            section.lower.clone(),
            section.upper.clone(),
            validity,
            section.std_min.unwrap_or(DEFAULT_STD_MIN),
            section.std_max.clone(),
        )?)
    }

    pub fn build_datagen(&self, sim: &dyn Simulator) -> CliResult<DataGenConfig> {
        let section = self
            .datagen
            .as_ref()
            .ok_or_else(|| CliError::usage("config is missing the [datagen] section"))?;
        let d = sim.param_space().dim();
        if section.ground_truth_mean.len() != d {
            return Err(CliError::usage(format!(
                "ground_truth_mean has {} entries, simulator has {d} parameters",
                section.ground_truth_mean.len()
            )));
        }
        let ground_truth = match &section.ground_truth_std {
            None => GroundTruth::Fixed(DynamicsSample::new(section.ground_truth_mean.clone())),
            Some(std) => GroundTruth::Distribution(DynamicsDistribution::new(
                sim.param_space().clone(),
                section.ground_truth_mean.clone(),
                std.clone(),
            )?),
        };
        let excitation = match section.excitation.as_str() {
            "chirp" => ExcitationKind::Chirp,
            "pulses" => ExcitationKind::Pulses,
            other => {
                return Err(CliError::usage(format!(
                    "unknown excitation '{other}' (expected chirp or pulses)"
                )))
            }
        };
        let noise_std = section.noise_std.broadcast(sim.state_dim(), "noise_std")?;
        Ok(DataGenConfig {
            ground_truth,
            resample_every: section.resample_every,
            excitation,
            noise_std,
            transitions: section.transitions,
            episodes: section.episodes,
            seed: section.seed,
        })
    }

    pub fn build_likelihood(&self, state_dim: usize) -> CliResult<LikelihoodConfig> {
        let section = self
            .likelihood
            .as_ref()
            .ok_or_else(|| CliError::usage("config is missing the [likelihood] section"))?;
        let epsilon = section.epsilon.broadcast(state_dim, "epsilon")?;
        let mut cfg = LikelihoodConfig::new(section.k, epsilon, section.lambda, section.seed);
        cfg.orientation_slots = section.orientation_slots.clone();
        Ok(cfg)
    }

    pub fn build_fit(&self, sim: &dyn Simulator) -> CliResult<FitConfig> {
        let section = self
            .optimizer
            .as_ref()
            .ok_or_else(|| CliError::usage("config is missing the [optimizer] section"))?;
        let likelihood = self.build_likelihood(sim.state_dim())?;
        let objective = parse_objective(&section.objective)?;
        let mut fit = FitConfig::new(objective, section.budget, likelihood);
        fit.stagnation_window = section.stagnation_window;
        fit.stagnation_tol = section.stagnation_tol;
        fit.population = section.population;
        match (&section.phi_init_mean, &section.phi_init_std) {
            (Some(mean), Some(std)) => fit.phi_init = Some((mean.clone(), std.clone())),
            (None, None) => {}
            (Some(mean), None) => {
                // means-only initial guess: stds fall back to the default
                let space = sim.param_space();
                let std = space
                    .std_max()
                    .iter()
                    .map(|hi| (space.std_min() * hi).sqrt())
                    .collect();
                fit.phi_init = Some((mean.clone(), std));
            }
            (None, Some(_)) => {
                return Err(CliError::usage(
                    "phi_init_std without phi_init_mean is not meaningful",
                ))
            }
        }
        Ok(fit)
    }

    pub fn channel_roles(&self) -> CliResult<Vec<(String, ChannelRole)>> {
        let section = self
            .preprocess
            .as_ref()
            .ok_or_else(|| CliError::usage("config is missing the [preprocess] section"))?;
        section
            .channels
            .iter()
            .map(|spec| {
                let role = match spec.role.as_str() {
                    "position" => ChannelRole::Position,
                    "quaternion" => ChannelRole::Quaternion,
                    "action" => ChannelRole::Action,
                    other => {
                        return Err(CliError::usage(format!(
                            "channel '{}': unknown role '{other}'",
                            spec.name
                        )))
                    }
                };
                Ok((spec.name.clone(), role))
            })
            .collect()
    }
}

pub fn parse_objective(text: &str) -> CliResult<ObjectiveKind> {
    match text {
        "dropo" => Ok(ObjectiveKind::DropoLogLikelihood),
        "droid" => Ok(ObjectiveKind::DroidL2),
        other => Err(CliError::usage(format!(
            "unknown objective '{other}' (expected dropo or droid)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[simulator]
id = "mass_spring_damper"
dt = 0.01

[likelihood]
k = 10
lambda = 1
epsilon = 1e-8
seed = 3

[optimizer]
objective = "dropo"
budget = 100
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = RunConfig::from_str(MINIMAL).unwrap();
        let sim = cfg.build_simulator().unwrap();
        assert_eq!(sim.state_dim(), 2);
        let fit = cfg.build_fit(sim.as_ref()).unwrap();
        assert_eq!(fit.budget, 100);
        assert_eq!(fit.likelihood.epsilon, vec![1e-8, 1e-8]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{MINIMAL}\nmystery = 4\n");
        assert!(RunConfig::from_str(&bad).is_err());
        let bad_nested = MINIMAL.replace("dt = 0.01", "dt = 0.01\ntypo_key = 1");
        assert!(RunConfig::from_str(&bad_nested).is_err());
    }

    #[test]
    fn overrides_replace_seed_and_objective() {
        let mut cfg = RunConfig::from_str(MINIMAL).unwrap();
        cfg.apply_overrides(Some(99), Some("droid"));
        assert_eq!(cfg.likelihood.as_ref().unwrap().seed, 99);
        assert_eq!(cfg.optimizer.as_ref().unwrap().objective, "droid");
    }

    #[test]
    fn space_override_must_match_names() {
        let text = format!(
            "{MINIMAL}\n[space]\nnames = [\"x\"]\nlower = [0.1]\nupper = [1.0]\n"
        );
        let cfg = RunConfig::from_str(&text).unwrap();
        assert!(cfg.build_simulator().is_err());
    }

    #[test]
    fn frozen_mass_requires_chain() {
        let text = MINIMAL.replace("dt = 0.01", "dt = 0.01\nfrozen_mass_index = 0\nfrozen_mass_value = 2.0");
        let cfg = RunConfig::from_str(&text).unwrap();
        assert!(cfg.build_simulator().is_err());
    }

    #[test]
    fn chain_freeze_shrinks_space() {
        let text = r#"
[simulator]
id = "mass_chain"
dt = 0.01
frozen_mass_index = 0
frozen_mass_value = 2.5
"#;
        let cfg = RunConfig::from_str(text).unwrap();
        let sim = cfg.build_simulator().unwrap();
        assert_eq!(sim.param_space().dim(), 3);
    }

    #[test]
    fn config_echo_round_trips() {
        let cfg = RunConfig::from_str(MINIMAL).unwrap();
        let echoed = cfg.to_toml();
        let again = RunConfig::from_str(&echoed).unwrap();
        assert_eq!(echoed, again.to_toml());
    }
}

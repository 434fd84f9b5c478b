//! Deterministic, parameterized, state-settable forward models.
//!
//! Every simulator advances an explicit state vector by a fixed timestep
//! under an explicit action and an explicit dynamics parameter vector.
//! There is no hidden state: replaying a window of actions from a recorded
//! state is a pure function of its inputs, which is what makes sampled
//! next-state distributions meaningful.

mod chain;
mod datagen;
mod mass_spring;
mod puck;

pub use chain::{inject_misspecification, MassChain3};
pub use datagen::{
    generate_dataset, DataGenConfig, ExcitationKind, GeneratedData, GroundTruth, XiDraw,
};
pub use mass_spring::MassSpringDamper;
pub use puck::SlidingPuck2D;

use crate::error::{Error, Result};
use crate::params::{DynamicsSample, ParameterSpace};

/// Contract every forward model satisfies.
///
/// Determinism is part of the contract: identical `(state, action, params)`
/// always produce the bitwise-identical next state, and replay starts from
/// exactly the provided state.
pub trait Simulator: Send + Sync {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Fixed integration timestep in seconds.
    fn dt(&self) -> f64;
    /// The optimizable parameter space of this simulator instance.
    fn param_space(&self) -> &ParameterSpace;
    /// A canonical rest state used when generating synthetic datasets.
    fn initial_state(&self) -> Vec<f64> {
        vec![0.0; self.state_dim()]
    }

    /// Advances one timestep. Errors on invalid parameter values
    /// (e.g. a non-positive mass).
    fn step(&self, state: &[f64], action: &[f64], params: &DynamicsSample) -> Result<Vec<f64>>;

    /// Sets the state to exactly `start` and executes the action window,
    /// returning the state after `actions.len()` steps.
    fn replay(
        &self,
        start: &[f64],
        actions: &[Vec<f64>],
        params: &DynamicsSample,
    ) -> Result<Vec<f64>> {
        if actions.is_empty() {
            return Err(Error::InvalidConfig(
                "replay requires at least one action".into(),
            ));
        }
        let mut state = start.to_vec();
        for action in actions {
            state = self.step(&state, action, params)?;
        }
        Ok(state)
    }
}

fn check_dims(sim: &dyn Simulator, state: &[f64], action: &[f64], params: &DynamicsSample) -> Result<()> {
    if state.len() != sim.state_dim() {
        return Err(Error::DimensionMismatch {
            context: "simulator state".into(),
            expected: sim.state_dim(),
            got: state.len(),
        });
    }
    if action.len() != sim.action_dim() {
        return Err(Error::DimensionMismatch {
            context: "simulator action".into(),
            expected: sim.action_dim(),
            got: action.len(),
        });
    }
    if params.dim() != sim.param_space().dim() {
        return Err(Error::DimensionMismatch {
            context: "simulator parameters".into(),
            expected: sim.param_space().dim(),
            got: params.dim(),
        });
    }
    Ok(())
}

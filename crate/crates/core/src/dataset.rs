//! Trajectories and the transition datasets extracted from them.

use crate::error::{Error, Result};

/// A recorded state-action trajectory.
///
/// `actions[t]` was applied between `states[t]` and `states[t + 1]`, so a
/// trajectory always holds one more state than actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Vec<f64>>, actions: Vec<Vec<f64>>) -> Result<Self> {
        if states.len() != actions.len() + 1 {
            return Err(Error::InvalidTrajectory(format!(
                "{} states require exactly {} actions, got {}",
                states.len(),
                states.len().max(1) - 1,
                actions.len()
            )));
        }
        if times.len() != states.len() {
            return Err(Error::InvalidTrajectory(format!(
                "{} timestamps for {} states",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidTrajectory(
                "timestamps must be strictly increasing".into(),
            ));
        }
        let state_dim = states.first().map_or(0, Vec::len);
        if states.iter().any(|s| s.len() != state_dim) {
            return Err(Error::InvalidTrajectory(
                "state vectors have inconsistent dimensions".into(),
            ));
        }
        let action_dim = actions.first().map_or(0, Vec::len);
        if actions.iter().any(|a| a.len() != action_dim) {
            return Err(Error::InvalidTrajectory(
                "action vectors have inconsistent dimensions".into(),
            ));
        }
        Ok(Self {
            times,
            states,
            actions,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn action_dim(&self) -> usize {
        self.actions.first().map_or(0, Vec::len)
    }
}

/// One supervised tuple: start state, the window of `lambda` recorded
/// actions, and the recorded state reached after replaying them.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub start_state: Vec<f64>,
    pub actions: Vec<Vec<f64>>,
    pub next_state: Vec<f64>,
}

/// Ordered transitions extracted from one or more trajectories. The order is
/// stable so reductions over transitions are bitwise reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDataset {
    pub lambda: usize,
    pub transitions: Vec<Transition>,
    pub state_dim: usize,
    pub action_dim: usize,
}

impl TransitionDataset {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Appends the transitions of `other`. Transitions never span trajectory
    /// boundaries; multi-trajectory datasets are concatenations like this.
    pub fn extend(&mut self, other: TransitionDataset) -> Result<()> {
        if other.lambda != self.lambda {
            return Err(Error::InvalidConfig(format!(
                "cannot merge datasets with lambda {} and {}",
                self.lambda, other.lambda
            )));
        }
        if other.state_dim != self.state_dim || other.action_dim != self.action_dim {
            return Err(Error::DimensionMismatch {
                context: "merging transition datasets".into(),
                expected: self.state_dim,
                got: other.state_dim,
            });
        }
        self.transitions.extend(other.transitions);
        Ok(())
    }
}

/// Slices a trajectory into `(s_t, a_t..a_{t+lambda-1}, s_{t+lambda})`
/// tuples, one per valid start index.
pub fn extract_transitions(traj: &Trajectory, lambda: usize) -> Result<TransitionDataset> {
    if lambda == 0 {
        return Err(Error::InvalidConfig("lambda must be at least 1".into()));
    }
    if traj.states.len() < lambda + 1 {
        return Err(Error::TrajectoryTooShort {
            states: traj.states.len(),
            lambda,
        });
    }
    let count = traj.actions.len() - lambda + 1;
    let transitions = (0..count)
        .map(|t| Transition {
            start_state: traj.states[t].clone(),
            actions: traj.actions[t..t + lambda].to_vec(),
            next_state: traj.states[t + lambda].clone(),
        })
        .collect();
    Ok(TransitionDataset {
        lambda,
        transitions,
        state_dim: traj.state_dim(),
        action_dim: traj.action_dim(),
    })
}

/// Extracts and concatenates transitions from several trajectories in order.
pub fn extract_transitions_multi(
    trajs: &[Trajectory],
    lambda: usize,
) -> Result<TransitionDataset> {
    let mut iter = trajs.iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidConfig("no trajectories supplied".into()))?;
    let mut dataset = extract_transitions(first, lambda)?;
    for traj in iter {
        dataset.extend(extract_transitions(traj, lambda)?)?;
    }
    Ok(dataset)
}

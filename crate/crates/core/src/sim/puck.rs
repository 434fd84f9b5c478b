//! Planar puck sliding under anisotropic Coulomb friction.

use crate::error::{Error, Result};
use crate::params::{DynamicsSample, ParameterSpace, DEFAULT_STD_MIN};
use crate::sim::{check_dims, Simulator};

const GRAVITY: f64 = 9.81;
/// Axis speeds below this are treated as rest: no friction force applies.
const VELOCITY_DEADBAND: f64 = 1e-6;

/// A puck on a flat surface with independent friction coefficients along the
/// two axes. State is `(x, y, vx, vy)`; parameters are `(m, fx, fy)`: mass
/// (kg) and the per-axis Coulomb coefficients; the action is the applied
/// force `(Fx, Fy)` in newtons.
///
/// Friction decelerates each axis by `f_axis * g` against the direction of
/// motion, clamped so a single step never drives the velocity through zero,
/// and vanishes below a small velocity deadband. A puck at rest under zero
/// applied force therefore stays at rest, and coasting speed never grows.
#[derive(Debug, Clone)]
pub struct SlidingPuck2D {
    dt: f64,
    space: ParameterSpace,
}

impl SlidingPuck2D {
    pub fn new(dt: f64) -> Self {
        let space = ParameterSpace::new(
            vec!["m".into(), "fx".into(), "fy".into()],
            vec![0.05, 0.1, 0.1],
            vec![0.5, 0.8, 0.8],
            vec![0.0, 0.0, 0.0],
            DEFAULT_STD_MIN,
            None,
        )
        .expect("built-in space is valid");
        Self { dt, space }
    }

    pub fn with_space(dt: f64, space: ParameterSpace) -> Self {
        Self { dt, space }
    }

    fn axis_update(&self, v: f64, applied_force: f64, m: f64, mu: f64) -> f64 {
        let v_kick = v + applied_force / m * self.dt;
        if v_kick.abs() < VELOCITY_DEADBAND {
            return v_kick;
        }
        let decel = mu * GRAVITY * self.dt;
        v_kick - decel.min(v_kick.abs()) * v_kick.signum()
    }
}

impl Simulator for SlidingPuck2D {
    fn state_dim(&self) -> usize {
        4
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn param_space(&self) -> &ParameterSpace {
        &self.space
    }

    fn step(&self, state: &[f64], action: &[f64], params: &DynamicsSample) -> Result<Vec<f64>> {
        check_dims(self, state, action, params)?;
        let (m, fx, fy) = (params.values[0], params.values[1], params.values[2]);
        if !(m > 0.0) {
            return Err(Error::InvalidParams(format!("mass must be positive, got {m}")));
        }
        if fx < 0.0 || fy < 0.0 {
            return Err(Error::InvalidParams(format!(
                "friction coefficients must be non-negative, got fx={fx}, fy={fy}"
            )));
        }
        let vx_next = self.axis_update(state[2], action[0], m, fx);
        let vy_next = self.axis_update(state[3], action[1], m, fy);
        Ok(vec![
            state[0] + vx_next * self.dt,
            state[1] + vy_next * self.dt,
            vx_next,
            vy_next,
        ])
    }
}

//! Forced mass-spring-damper integrated with semi-implicit Euler.

use crate::error::{Error, Result};
use crate::params::{DynamicsSample, ParameterSpace, DEFAULT_STD_MIN};
use crate::sim::{check_dims, Simulator};

/// One mass on a spring with viscous damping, driven by a force.
///
/// State is `(x, v)` in metres and metres per second; parameters are
/// `(m, k, c)`: mass (kg), stiffness (N/m) and damping (N s/m); the action
/// is the applied force (N).
#[derive(Debug, Clone)]
pub struct MassSpringDamper {
    dt: f64,
    space: ParameterSpace,
}

impl MassSpringDamper {
    pub fn new(dt: f64) -> Self {
        let space = ParameterSpace::new(
            vec!["m".into(), "k".into(), "c".into()],
            vec![0.2, 0.5, 0.05],
            vec![5.0, 20.0, 2.0],
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
}

impl Simulator for MassSpringDamper {
    fn state_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn param_space(&self) -> &ParameterSpace {
        &self.space
    }

    fn step(&self, state: &[f64], action: &[f64], params: &DynamicsSample) -> Result<Vec<f64>> {
        check_dims(self, state, action, params)?;
        let (m, k, c) = (params.values[0], params.values[1], params.values[2]);
        if !(m > 0.0) {
            return Err(Error::InvalidParams(format!("mass must be positive, got {m}")));
        }
        if k < 0.0 || c < 0.0 {
            return Err(Error::InvalidParams(format!(
                "stiffness and damping must be non-negative, got k={k}, c={c}"
            )));
        }
        let (x, v) = (state[0], state[1]);
        let force = action[0];
        let accel = (force - k * x - c * v) / m;
        let v_next = v + accel * self.dt;
        let x_next = x + v_next * self.dt;
        Ok(vec![x_next, v_next])
    }
}

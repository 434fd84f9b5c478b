//! Chain of three coupled masses, with optional frozen-mass misspecification.

use crate::error::{Error, Result};
use crate::params::{DynamicsSample, ParameterSpace, DEFAULT_STD_MIN};
use crate::sim::{check_dims, Simulator};

/// Three masses in a line, coupled by springs of shared stiffness `k`, the
/// first mass also anchored to the origin. A force acts on mass 1.
///
/// State is `(x1, x2, x3, v1, v2, v3)`; the full parameter vector is
/// `(m1, m2, m3, k)`. A frozen-mass override removes one mass from the
/// optimizable space and pins it at an arbitrary (possibly wrong) value,
/// which is how an unmodelled phenomenon is staged in source/target
/// experiments.
#[derive(Debug, Clone)]
pub struct MassChain3 {
    dt: f64,
    space: ParameterSpace,
    fixed_mass_override: Option<(usize, f64)>,
}

impl MassChain3 {
    pub fn new(dt: f64) -> Self {
        let space = ParameterSpace::new(
            vec!["m1".into(), "m2".into(), "m3".into(), "k".into()],
            vec![0.5, 0.5, 0.5, 1.0],
            vec![4.0, 4.0, 4.0, 15.0],
            vec![0.0, 0.0, 0.0, 0.0],
            DEFAULT_STD_MIN,
            None,
        )
        .expect("built-in space is valid");
        Self {
            dt,
            space,
            fixed_mass_override: None,
        }
    }

    pub fn with_space(dt: f64, space: ParameterSpace) -> Self {
        Self {
            dt,
            space,
            fixed_mass_override: None,
        }
    }

    pub fn fixed_mass_override(&self) -> Option<(usize, f64)> {
        self.fixed_mass_override
    }

    /// Assembles `(m1, m2, m3, k)` from an optimizable sample, substituting
    /// the frozen mass when an override is active.
    fn physical_params(&self, params: &DynamicsSample) -> [f64; 4] {
        match self.fixed_mass_override {
            None => [
                params.values[0],
                params.values[1],
                params.values[2],
                params.values[3],
            ],
            Some((frozen, value)) => {
                let mut out = [0.0; 4];
                let mut src = params.values.iter();
                for (i, slot) in out.iter_mut().take(3).enumerate() {
                    *slot = if i == frozen {
                        value
                    } else {
                        *src.next().expect("sample dims checked")
                    };
                }
                out[3] = *src.next().expect("sample dims checked");
                out
            }
        }
    }
}

/// Returns a chain whose mass `index` is frozen at `wrong_value` and removed
/// from the optimizable parameter space.
pub fn inject_misspecification(
    sim: &MassChain3,
    index: usize,
    wrong_value: f64,
) -> Result<MassChain3> {
    if sim.fixed_mass_override.is_some() {
        return Err(Error::InvalidConfig(
            "chain already has a frozen mass".into(),
        ));
    }
    if index > 2 {
        return Err(Error::InvalidConfig(format!(
            "index {index} does not name a mass parameter (expected 0..=2)"
        )));
    }
    if !(wrong_value > 0.0) {
        return Err(Error::InvalidParams(format!(
            "frozen mass must be positive, got {wrong_value}"
        )));
    }
    Ok(MassChain3 {
        dt: sim.dt,
        space: sim.space.without(index)?,
        fixed_mass_override: Some((index, wrong_value)),
    })
}

impl Simulator for MassChain3 {
    fn state_dim(&self) -> usize {
        6
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
        let [m1, m2, m3, k] = self.physical_params(params);
        for (name, m) in [("m1", m1), ("m2", m2), ("m3", m3)] {
            if !(m > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive, got {m}"
                )));
            }
        }
        if k < 0.0 {
            return Err(Error::InvalidParams(format!(
                "stiffness must be non-negative, got {k}"
            )));
        }
        let (x1, x2, x3) = (state[0], state[1], state[2]);
        let (v1, v2, v3) = (state[3], state[4], state[5]);
        let force = action[0];
        let f1 = force - k * x1 - k * (x1 - x2);
        let f2 = -k * (x2 - x1) - k * (x2 - x3);
        let f3 = -k * (x3 - x2);
        let v1n = v1 + f1 / m1 * self.dt;
        let v2n = v2 + f2 / m2 * self.dt;
        let v3n = v3 + f3 / m3 * self.dt;
        Ok(vec![
            x1 + v1n * self.dt,
            x2 + v2n * self.dt,
            x3 + v3n * self.dt,
            v1n,
            v2n,
            v3n,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRUE_PARAMS: [f64; 4] = [1.5, 1.0, 2.0, 6.0];

    #[test]
    fn override_shrinks_parameter_space() {
        let full = MassChain3::new(0.01);
        assert_eq!(full.param_space().dim(), 4);
        let miss = inject_misspecification(&full, 0, TRUE_PARAMS[0] + 1.0).unwrap();
        assert_eq!(
            miss.param_space().names(),
            &["m2".to_string(), "m3".to_string(), "k".to_string()]
        );
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let full = MassChain3::new(0.01);
        assert!(inject_misspecification(&full, 3, 1.0).is_err());
        assert!(inject_misspecification(&full, 7, 1.0).is_err());
    }

    #[test]
    fn wrong_frozen_mass_creates_model_mismatch() {
        let dt = 0.01;
        let full = MassChain3::new(dt);
        let true_sample = DynamicsSample::new(TRUE_PARAMS.to_vec());
        let actions: Vec<Vec<f64>> = (0..50).map(|i| vec![(i as f64 * 0.3).sin()]).collect();
        let start = full.initial_state();
        let target = full.replay(&start, &actions, &true_sample).unwrap();

        let miss = inject_misspecification(&full, 0, TRUE_PARAMS[0] + 1.0).unwrap();
        let rest = DynamicsSample::new(vec![TRUE_PARAMS[1], TRUE_PARAMS[2], TRUE_PARAMS[3]]);
        let replayed = miss.replay(&start, &actions, &rest).unwrap();
        let err: f64 = target
            .iter()
            .zip(&replayed)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!(err > 1e-6, "expected visible mismatch, got {err}");
    }

    #[test]
    fn correct_frozen_mass_is_a_noop() {
        let dt = 0.01;
        let full = MassChain3::new(dt);
        let true_sample = DynamicsSample::new(TRUE_PARAMS.to_vec());
        let actions: Vec<Vec<f64>> = (0..50).map(|i| vec![(i as f64 * 0.3).cos()]).collect();
        let start = vec![0.1, 0.0, -0.05, 0.0, 0.2, 0.0];
        let target = full.replay(&start, &actions, &true_sample).unwrap();

        let frozen_right = inject_misspecification(&full, 0, TRUE_PARAMS[0]).unwrap();
        let rest = DynamicsSample::new(vec![TRUE_PARAMS[1], TRUE_PARAMS[2], TRUE_PARAMS[3]]);
        let replayed = frozen_right.replay(&start, &actions, &rest).unwrap();
        assert_eq!(target, replayed);
    }
}

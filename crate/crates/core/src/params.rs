//! Parameter spaces, dynamics distributions and dynamics samples.
//!
//! A [`ParameterSpace`] declares which physical parameters are searched over
//! and within which bounds. A [`DynamicsDistribution`] is the object being
//! optimized: one mean and one standard deviation per parameter, interpreted
//! as an uncorrelated truncated normal over the space. A [`DynamicsSample`]
//! is a single concrete parameter vector a simulator can run with.

use crate::error::{Error, Result};

/// Default floor for standard deviations, in physical units.
pub const DEFAULT_STD_MIN: f64 = 1e-5;

/// Search space for physical parameters.
///
/// `lower`/`upper` bound the mean search, `validity_lower` are hard physical
/// floors (a drawn sample must lie strictly above them), and
/// `std_min`/`std_max` bound per-parameter standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    validity_lower: Vec<f64>,
    std_min: f64,
    std_max: Vec<f64>,
}

impl ParameterSpace {
    /// Builds a space with explicit bounds.
    ///
    /// `std_max` defaults to `(upper - lower) / 4` per parameter when `None`,
    /// which keeps the two-sigma truncation of a maximally wide distribution
    /// inside a plausible region.
    pub fn new(
        names: Vec<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        validity_lower: Vec<f64>,
        std_min: f64,
        std_max: Option<Vec<f64>>,
    ) -> Result<Self> {
        let d = names.len();
        if d == 0 {
            return Err(Error::InvalidSpace("space has no parameters".into()));
        }
        for (field, len) in [
            ("lower", lower.len()),
            ("upper", upper.len()),
            ("validity_lower", validity_lower.len()),
        ] {
            if len != d {
                return Err(Error::DimensionMismatch {
                    context: format!("parameter space field '{field}'"),
                    expected: d,
                    got: len,
                });
            }
        }
        let std_max = std_max.unwrap_or_else(|| {
            lower
                .iter()
                .zip(&upper)
                .map(|(lo, hi)| (hi - lo) / 4.0)
                .collect()
        });
        if std_max.len() != d {
            return Err(Error::DimensionMismatch {
                context: "parameter space field 'std_max'".into(),
                expected: d,
                got: std_max.len(),
            });
        }
        if !(std_min > 0.0) {
            return Err(Error::InvalidSpace(format!(
                "std_min must be positive, got {std_min}"
            )));
        }
        for i in 0..d {
            if !(lower[i] < upper[i]) {
                return Err(Error::InvalidSpace(format!(
                    "'{}': lower {} must be below upper {}",
                    names[i], lower[i], upper[i]
                )));
            }
            if validity_lower[i] > lower[i] {
                return Err(Error::InvalidSpace(format!(
                    "'{}': validity floor {} exceeds search lower bound {}",
                    names[i], validity_lower[i], lower[i]
                )));
            }
            if !(std_min < std_max[i]) {
                return Err(Error::InvalidSpace(format!(
                    "'{}': std_min {} must be below std_max {}",
                    names[i], std_min, std_max[i]
                )));
            }
        }
        Ok(Self {
            names,
            lower,
            upper,
            validity_lower,
            std_min,
            std_max,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn validity_lower(&self) -> &[f64] {
        &self.validity_lower
    }

    pub fn std_min(&self) -> f64 {
        self.std_min
    }

    pub fn std_max(&self) -> &[f64] {
        &self.std_max
    }

    /// Index of a parameter by name.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Returns a copy of the space with the parameter at `index` removed.
    pub fn without(&self, index: usize) -> Result<Self> {
        if index >= self.dim() {
            return Err(Error::InvalidSpace(format!(
                "parameter index {index} out of range (dim {})",
                self.dim()
            )));
        }
        let drop = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .enumerate()
                .filter(|(i, _)| *i != index)
                .map(|(_, x)| *x)
                .collect()
        };
        Self::new(
            self.names
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != index)
                .map(|(_, n)| n.clone())
                .collect(),
            drop(&self.lower),
            drop(&self.upper),
            drop(&self.validity_lower),
            self.std_min,
            Some(drop(&self.std_max)),
        )
    }
}

/// The optimized object: per-parameter mean and standard deviation over a
/// [`ParameterSpace`]. Dimensions must agree; value-range invariants are
/// checked by [`DynamicsDistribution::validate`] so that diagnostic results
/// (for instance a baseline whose reported spread sits below the sampling
/// floor) can still be represented.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsDistribution {
    space: ParameterSpace,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl DynamicsDistribution {
    pub fn new(space: ParameterSpace, mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                context: "distribution mean".into(),
                expected: space.dim(),
                got: mean.len(),
            });
        }
        if std.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                context: "distribution std".into(),
                expected: space.dim(),
                got: std.len(),
            });
        }
        Ok(Self { space, mean, std })
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Per-parameter variances, derived from the canonical std field.
    pub fn variances(&self) -> Vec<f64> {
        self.std.iter().map(|s| s * s).collect()
    }

    /// Sum of per-parameter variances; the scalar tracked by epsilon sweeps.
    pub fn total_variance(&self) -> f64 {
        self.std.iter().map(|s| s * s).sum()
    }

    /// Checks every distribution invariant, reporting the first violation.
    ///
    /// Total function: never panics, never errors for reasons other than the
    /// verdict itself.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.mean.len() != self.std.len() {
            return Err(format!(
                "dimension mismatch: mean has {} entries, std has {}",
                self.mean.len(),
                self.std.len()
            ));
        }
        if self.mean.len() != self.space.dim() {
            return Err(format!(
                "dimension mismatch: vectors have {} entries, space has {}",
                self.mean.len(),
                self.space.dim()
            ));
        }
        for (i, name) in self.space.names().iter().enumerate() {
            if !self.mean[i].is_finite() || !self.std[i].is_finite() {
                return Err(format!("'{name}': non-finite mean or std"));
            }
            if self.std[i] < self.space.std_min() {
                return Err(format!(
                    "'{name}': std below floor ({} < {})",
                    self.std[i],
                    self.space.std_min()
                ));
            }
        }
        Ok(())
    }
}

/// A single concrete dynamics parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSample {
    pub values: Vec<f64>,
}

impl DynamicsSample {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

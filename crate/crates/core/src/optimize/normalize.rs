//! Mapping between physical distribution parameters and the optimizer's
//! `[0, 4]` search box.
//!
//! Means map linearly over their search interval; standard deviations map
//! log-scale over `[std_min, std_max]`, so the optimizer resolves spreads
//! spanning several orders of magnitude with uniform effort.

use crate::error::{Error, Result};
use crate::params::{DynamicsDistribution, ParameterSpace};

/// Upper edge of the normalized search box.
pub const BOX_HIGH: f64 = 4.0;

/// A distribution encoded as a point in `[0, 4]^{2d}`: the `d` normalized
/// means followed by the `d` normalized (log-scale) stds.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPhi {
    pub z: Vec<f64>,
}

fn check_bounds(space: &ParameterSpace) -> Result<()> {
    for i in 0..space.dim() {
        if space.upper()[i] == space.lower()[i] {
            return Err(Error::DegenerateBounds {
                name: space.names()[i].clone(),
                lower: space.lower()[i],
                upper: space.upper()[i],
            });
        }
    }
    Ok(())
}

/// Normalizes the mean vector alone (the search space of a means-only fit).
pub fn normalize_means(means: &[f64], space: &ParameterSpace) -> Result<Vec<f64>> {
    check_bounds(space)?;
    if means.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            context: "means to normalize".into(),
            expected: space.dim(),
            got: means.len(),
        });
    }
    means
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            let (lo, hi) = (space.lower()[i], space.upper()[i]);
            if mu < lo || mu > hi {
                return Err(Error::InvalidConfig(format!(
                    "mean of '{}' ({mu}) outside search interval [{lo}, {hi}]",
                    space.names()[i]
                )));
            }
            Ok(BOX_HIGH * (mu - lo) / (hi - lo))
        })
        .collect()
}

/// Inverse of [`normalize_means`]; coordinates are clamped into the box.
pub fn denormalize_means(z: &[f64], space: &ParameterSpace) -> Result<Vec<f64>> {
    check_bounds(space)?;
    if z.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            context: "normalized means".into(),
            expected: space.dim(),
            got: z.len(),
        });
    }
    Ok(z.iter()
        .enumerate()
        .map(|(i, &zi)| {
            let (lo, hi) = (space.lower()[i], space.upper()[i]);
            (lo + zi.clamp(0.0, BOX_HIGH) / BOX_HIGH * (hi - lo)).clamp(lo, hi)
        })
        .collect())
}

/// Encodes a distribution into the `[0, 4]^{2d}` box.
pub fn normalize_phi(phi: &DynamicsDistribution, space: &ParameterSpace) -> Result<NormalizedPhi> {
    let mut z = normalize_means(phi.mean(), space)?;
    if phi.std().len() != space.dim() {
        return Err(Error::DimensionMismatch {
            context: "stds to normalize".into(),
            expected: space.dim(),
            got: phi.std().len(),
        });
    }
    for (i, &sigma) in phi.std().iter().enumerate() {
        let (lo, hi) = (space.std_min(), space.std_max()[i]);
        if sigma < lo || sigma > hi {
            return Err(Error::InvalidConfig(format!(
                "std of '{}' ({sigma}) outside [{lo}, {hi}]",
                space.names()[i]
            )));
        }
        z.push(BOX_HIGH * (sigma.ln() - lo.ln()) / (hi.ln() - lo.ln()));
    }
    Ok(NormalizedPhi { z })
}

/// Decodes a `[0, 4]^{2d}` point into a distribution over `space`.
/// Coordinates are clamped into the box, so the result always satisfies the
/// search bounds and the std floor.
pub fn denormalize_phi(z: &[f64], space: &ParameterSpace) -> Result<DynamicsDistribution> {
    let d = space.dim();
    if z.len() != 2 * d {
        return Err(Error::DimensionMismatch {
            context: "normalized distribution".into(),
            expected: 2 * d,
            got: z.len(),
        });
    }
    let mean = denormalize_means(&z[..d], space)?;
    let std = z[d..]
        .iter()
        .enumerate()
        .map(|(i, &zi)| {
            let (lo, hi) = (space.std_min(), space.std_max()[i]);
            // clamp kills exp/ln round-trip drift at the box edges, keeping
            // the std floor invariant exact
            (lo.ln() + zi.clamp(0.0, BOX_HIGH) / BOX_HIGH * (hi.ln() - lo.ln()))
                .exp()
                .clamp(lo, hi)
        })
        .collect();
    DynamicsDistribution::new(space.clone(), mean, std)
}

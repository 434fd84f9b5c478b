//! Orientation residuals for likelihood state vectors.
//!
//! Full quaternions do not fit a Gaussian next-state model, so orientations
//! enter the likelihood as the rotation angle between the recorded and the
//! replayed quaternion. The recorded state carries 0 in that slot; replayed
//! samples carry the signed angle, duplicated with both signs so the
//! per-slot distribution is symmetric around zero.

use crate::error::{Error, Result};

/// Rotation angle in radians between two unit quaternions, in `[0, pi]`.
///
/// Antipodal quaternions describe the same rotation, so the inner product
/// enters through its absolute value. Inputs are renormalized; (near-)zero
/// norms are rejected.
pub fn quaternion_angle_residual(q_real: &[f64; 4], q_sim: &[f64; 4]) -> Result<f64> {
    let normalize = |q: &[f64; 4]| -> Result<[f64; 4]> {
        let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-9 {
            return Err(Error::ZeroNormQuaternion(norm));
        }
        Ok([q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm])
    };
    let a = normalize(q_real)?;
    let b = normalize(q_sim)?;
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    Ok(2.0 * dot.abs().clamp(0.0, 1.0).acos())
}

/// Duplicates every replayed state with the sign of each orientation
/// residual slot flipped. The output holds `2K` states, sign pairs adjacent,
/// so the per-slot sample mean cancels to exactly zero.
pub fn symmetrize_orientation_samples(
    samples: &[Vec<f64>],
    orientation_slots: &[usize],
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(samples.len() * 2);
    for sample in samples {
        let mut flipped = sample.clone();
        for &slot in orientation_slots {
            flipped[slot] = -flipped[slot];
        }
        out.push(sample.clone());
        out.push(flipped);
    }
    out
}

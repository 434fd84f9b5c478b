//! Akima spline interpolation with analytic derivatives.
//!
//! Chosen over a plain cubic spline because its local slope weighting does
//! not overshoot between samples, which matters when resampled positions
//! are differentiated into velocities.

use crate::error::{Error, Result};

/// Piecewise cubic interpolant through all knots, C1 at interior knots.
///
/// Interior slopes follow Akima's weighting of neighbouring chord slopes;
/// the two extra slopes needed at each end are linearly extrapolated
/// (`d_{-1} = 2 d_0 - d_1`, and so on). With fewer than five knots the fit
/// degrades to piecewise linear.
#[derive(Debug, Clone)]
pub struct AkimaSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Per-segment `[a, b, c, d]` for `a + b u + c u^2 + d u^3`, `u = x - x_i`.
    coeffs: Vec<[f64; 4]>,
}

/// Fits an Akima spline to strictly increasing knot abscissae.
pub fn fit_akima(xs: &[f64], ys: &[f64]) -> Result<AkimaSpline> {
    AkimaSpline::fit(xs, ys)
}

impl AkimaSpline {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::InvalidKnots(format!(
                "need at least 2 knots, got {n}"
            )));
        }
        if ys.len() != n {
            return Err(Error::InvalidKnots(format!(
                "{n} abscissae but {} ordinates",
                ys.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidKnots(
                "knot abscissae must be strictly increasing".into(),
            ));
        }

        let chord: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();

        let slopes: Vec<f64> = if n < 5 {
            // piecewise-linear degradation: knot slope = right chord
            // (segment coefficients below only use chord via c = d = 0)
            Vec::new()
        } else {
            // extended chord slopes: ext[j + 2] = chord[j]
            let m = n - 1;
            let mut ext = vec![0.0; m + 4];
            ext[2..2 + m].copy_from_slice(&chord);
            ext[1] = 2.0 * ext[2] - ext[3];
            ext[0] = 2.0 * ext[1] - ext[2];
            ext[m + 2] = 2.0 * ext[m + 1] - ext[m];
            ext[m + 3] = 2.0 * ext[m + 2] - ext[m + 1];
            (0..n)
                .map(|i| {
                    let w_right = (ext[i + 3] - ext[i + 2]).abs();
                    let w_left = (ext[i + 1] - ext[i]).abs();
                    if w_right + w_left == 0.0 {
                        0.5 * (ext[i + 1] + ext[i + 2])
                    } else {
                        (w_right * ext[i + 1] + w_left * ext[i + 2]) / (w_right + w_left)
                    }
                })
                .collect()
        };

        let coeffs = (0..n - 1)
            .map(|i| {
                if n < 5 {
                    [ys[i], chord[i], 0.0, 0.0]
                } else {
                    let h = xs[i + 1] - xs[i];
                    let (t0, t1) = (slopes[i], slopes[i + 1]);
                    let c = (3.0 * chord[i] - 2.0 * t0 - t1) / h;
                    let d = (t0 + t1 - 2.0 * chord[i]) / (h * h);
                    [ys[i], t0, c, d]
                }
            })
            .collect();

        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            coeffs,
        })
    }

    pub fn knot_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    fn segment(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.knot_range();
        if x < lo || x > hi {
            return Err(Error::OutsideKnotRange { x, lo, hi });
        }
        let idx = self.xs.partition_point(|&k| k <= x);
        Ok(idx.saturating_sub(1).min(self.xs.len() - 2))
    }

    /// Interpolated value at `x`; `x` must lie within the knot range.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if x == *self.xs.last().unwrap() {
            return Ok(*self.ys.last().unwrap());
        }
        let i = self.segment(x)?;
        let u = x - self.xs[i];
        let [a, b, c, d] = self.coeffs[i];
        Ok(a + u * (b + u * (c + u * d)))
    }

    /// Analytic first derivative at `x`.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        let i = self.segment(x)?;
        let u = x - self.xs[i];
        let [_, b, c, d] = self.coeffs[i];
        Ok(b + u * (2.0 * c + 3.0 * d * u))
    }
}

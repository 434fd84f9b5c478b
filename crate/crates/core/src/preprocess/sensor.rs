//! Raw sensor logs: synchronization and resampling onto the simulator grid.

use std::collections::HashMap;

use crate::dataset::Trajectory;
use crate::error::{Error, Result};
use crate::preprocess::akima::AkimaSpline;

/// What a channel contributes to the assembled state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelRole {
    /// Scalar position-like signal; contributes one position slot and one
    /// derived velocity slot.
    Position,
    /// Unit quaternion (w, x, y, z); contributes four state slots.
    Quaternion,
    /// Scalar command; resampled by zero-order hold into the action vector.
    Action,
}

impl ChannelRole {
    pub fn width(self) -> usize {
        match self {
            ChannelRole::Quaternion => 4,
            _ => 1,
        }
    }
}

/// One named series with its own clock.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub role: ChannelRole,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// A bundle of asynchronous channels as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorLog {
    channels: Vec<Channel>,
}

impl SensorLog {
    pub fn new(channels: Vec<Channel>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidConfig("sensor log has no channels".into()));
        }
        for ch in &channels {
            if ch.times.len() != ch.values.len() {
                return Err(Error::InvalidConfig(format!(
                    "channel '{}': {} timestamps but {} values",
                    ch.name,
                    ch.times.len(),
                    ch.values.len()
                )));
            }
            if ch.times.len() < 2 {
                return Err(Error::InvalidConfig(format!(
                    "channel '{}' needs at least 2 samples",
                    ch.name
                )));
            }
            if ch.times.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidConfig(format!(
                    "channel '{}': timestamps must be strictly increasing",
                    ch.name
                )));
            }
            if ch.values.iter().any(|v| v.len() != ch.role.width()) {
                return Err(Error::InvalidConfig(format!(
                    "channel '{}': every sample must have {} component(s)",
                    ch.name,
                    ch.role.width()
                )));
            }
            if ch.role == ChannelRole::Quaternion {
                for (i, q) in ch.values.iter().enumerate() {
                    let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
                    if (norm - 1.0).abs() > 1e-6 {
                        return Err(Error::InvalidConfig(format!(
                            "channel '{}' sample {i}: quaternion norm {norm} deviates from 1",
                            ch.name
                        )));
                    }
                }
            }
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }
}

/// Shifts each channel's timestamps by its named offset (seconds). Channels
/// without an entry keep their clock; values are untouched.
pub fn synchronize(log: &SensorLog, offsets: &HashMap<String, f64>) -> Result<SensorLog> {
    for (name, offset) in offsets {
        if !offset.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "offset for channel '{name}' is not finite"
            )));
        }
        if log.channel(name).is_none() {
            return Err(Error::InvalidConfig(format!(
                "offset references unknown channel '{name}'"
            )));
        }
    }
    let channels = log
        .channels
        .iter()
        .map(|ch| {
            let shift = offsets.get(&ch.name).copied().unwrap_or(0.0);
            Channel {
                name: ch.name.clone(),
                role: ch.role,
                times: ch.times.iter().map(|t| t + shift).collect(),
                values: ch.values.clone(),
            }
        })
        .collect();
    SensorLog::new(channels)
}

/// Resamples a synchronized log onto the uniform simulator grid.
///
/// The grid spans the channels' common time window. Position channels are
/// evaluated through an Akima spline and differentiated for velocities;
/// quaternion channels are interpolated component-wise and renormalized;
/// action channels are held at their latest commanded value. The assembled
/// state is `[positions.., velocities.., quaternion components..]` in
/// channel order.
pub fn resample_to_timestep(log: &SensorLog, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "resampling timestep must be positive, got {dt}"
        )));
    }
    let start = log
        .channels
        .iter()
        .map(|c| c.times[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let end = log
        .channels
        .iter()
        .map(|c| *c.times.last().unwrap())
        .fold(f64::INFINITY, f64::min);
    if !(end - start >= 2.0 * dt) {
        return Err(Error::NoCommonWindow);
    }

    // grid times; the last point is clamped onto the window edge so that
    // accumulated rounding can never request extrapolation
    let steps = ((end - start) / dt * (1.0 + 1e-12)).floor() as usize;
    let times: Vec<f64> = (0..=steps)
        .map(|j| (start + j as f64 * dt).min(end))
        .collect();

    let mut position_channels: Vec<Vec<AkimaSpline>> = Vec::new();
    let mut quaternion_channels: Vec<Vec<AkimaSpline>> = Vec::new();
    let mut action_channels = Vec::new();
    for ch in &log.channels {
        match ch.role {
            ChannelRole::Action => action_channels.push(ch),
            role => {
                let splines = (0..role.width())
                    .map(|c| {
                        let ys: Vec<f64> = ch.values.iter().map(|v| v[c]).collect();
                        AkimaSpline::fit(&ch.times, &ys)
                    })
                    .collect::<Result<Vec<_>>>()?;
                if role == ChannelRole::Position {
                    position_channels.push(splines);
                } else {
                    quaternion_channels.push(splines);
                }
            }
        }
    }

    let mut states = Vec::with_capacity(times.len());
    for &t in &times {
        let mut state = Vec::new();
        for splines in &position_channels {
            state.push(splines[0].evaluate(t)?);
        }
        for splines in &position_channels {
            state.push(splines[0].derivative(t)?);
        }
        for splines in &quaternion_channels {
            let mut q: Vec<f64> = splines
                .iter()
                .map(|s| s.evaluate(t))
                .collect::<Result<Vec<_>>>()?;
            let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm < 1e-9 {
                return Err(Error::ZeroNormQuaternion(norm));
            }
            for c in &mut q {
                *c /= norm;
            }
            state.extend(q);
        }
        states.push(state);
    }

    let actions = times[..times.len() - 1]
        .iter()
        .map(|&t| {
            action_channels
                .iter()
                .map(|ch| {
                    // zero-order hold: latest command at or before t
                    let idx = ch.times.partition_point(|&s| s <= t);
                    ch.values[idx.saturating_sub(1)][0]
                })
                .collect()
        })
        .collect();

    Trajectory::new(times, states, actions)
}

/// Heuristic time-offset estimator between two channels.
///
/// Linearly resamples both channels onto a fine common grid, then scans the
/// discrete cross-correlation for the lag that best aligns `shifted` with
/// `base`. The returned value is ready to pass to [`synchronize`] as the
/// offset of the shifted channel. Intended as a convenience for eyeballing
/// sync offsets, not as a measurement.
pub fn estimate_offset(log: &SensorLog, base: &str, shifted: &str) -> Result<f64> {
    let a = log
        .channel(base)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown channel '{base}'")))?;
    let b = log
        .channel(shifted)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown channel '{shifted}'")))?;
    let start = a.times[0].max(b.times[0]);
    let end = a.times.last().unwrap().min(*b.times.last().unwrap());
    if !(end > start) {
        return Err(Error::NoCommonWindow);
    }
    let n = 2048usize;
    let dt = (end - start) / n as f64;
    let lerp = |ch: &Channel, t: f64| -> f64 {
        let idx = ch.times.partition_point(|&s| s <= t).clamp(1, ch.times.len() - 1);
        let (t0, t1) = (ch.times[idx - 1], ch.times[idx]);
        let (v0, v1) = (ch.values[idx - 1][0], ch.values[idx][0]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    };
    let series = |ch: &Channel| -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|i| lerp(ch, start + i as f64 * dt)).collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        raw.into_iter().map(|v| v - mean).collect()
    };
    let sa = series(a);
    let sb = series(b);
    let max_lag = (n / 4) as i64;
    let mut best = (f64::NEG_INFINITY, 0i64);
    for lag in -max_lag..=max_lag {
        // Pearson correlation over the overlapping segments; plain inner
        // products are biased toward small lags whenever the signal energy
        // is unevenly spread across the window
        let (lo, hi) = if lag >= 0 {
            (0usize, n - lag as usize)
        } else {
            ((-lag) as usize, n)
        };
        let count = (hi - lo) as f64;
        let (mut ma, mut mb) = (0.0, 0.0);
        for i in lo..hi {
            ma += sa[i];
            mb += sb[(i as i64 + lag) as usize];
        }
        ma /= count;
        mb /= count;
        let (mut cross, mut va, mut vb) = (0.0, 0.0, 0.0);
        for i in lo..hi {
            let da = sa[i] - ma;
            let db = sb[(i as i64 + lag) as usize] - mb;
            cross += da * db;
            va += da * da;
            vb += db * db;
        }
        let denom = (va * vb).sqrt();
        if denom > 0.0 {
            let corr = cross / denom;
            if corr > best.0 {
                best = (corr, lag);
            }
        }
    }
    // the shifted channel lags by best_lag * dt; the synchronize offset that
    // undoes the delay is its negative
    Ok(-(best.1 as f64) * dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_channel(name: &str, role: ChannelRole, times: Vec<f64>, values: Vec<f64>) -> Channel {
        Channel {
            name: name.into(),
            role,
            times,
            values: values.into_iter().map(|v| vec![v]).collect(),
        }
    }

    fn smooth_log(rate_hz: f64, duration: f64) -> SensorLog {
        let n = (duration * rate_hz) as usize;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 / rate_hz).collect();
        let pos: Vec<f64> = times.iter().map(|t| (1.7 * t).sin() * 0.5).collect();
        let cmd: Vec<f64> = times.iter().map(|t| (t * 4.0).floor() * 0.1).collect();
        SensorLog::new(vec![
            scalar_channel("pos", ChannelRole::Position, times.clone(), pos),
            scalar_channel("cmd", ChannelRole::Action, times, cmd),
        ])
        .unwrap()
    }

    #[test]
    fn synchronize_shifts_only_requested_channels() {
        let log = smooth_log(120.0, 1.0);
        let mut offsets = HashMap::new();
        offsets.insert("pos".to_string(), 0.5);
        let shifted = synchronize(&log, &offsets).unwrap();
        for (a, b) in log
            .channel("pos")
            .unwrap()
            .times
            .iter()
            .zip(&shifted.channel("pos").unwrap().times)
        {
            assert_eq!(a + 0.5, *b);
        }
        assert_eq!(
            log.channel("cmd").unwrap().times,
            shifted.channel("cmd").unwrap().times
        );
        assert_eq!(
            log.channel("pos").unwrap().values,
            shifted.channel("pos").unwrap().values
        );
    }

    #[test]
    fn synchronize_identity_and_inverse() {
        let log = smooth_log(50.0, 1.0);
        let zero = synchronize(&log, &HashMap::new()).unwrap();
        assert_eq!(log, zero);
        let mut fwd = HashMap::new();
        fwd.insert("pos".to_string(), 0.3);
        let mut back = HashMap::new();
        back.insert("pos".to_string(), -0.3);
        let roundtrip = synchronize(&synchronize(&log, &fwd).unwrap(), &back).unwrap();
        // exact inverse: t + 0.3 - 0.3 may round, so compare bit patterns of
        // the recomputed values explicitly
        for (a, b) in log
            .channel("pos")
            .unwrap()
            .times
            .iter()
            .zip(&roundtrip.channel("pos").unwrap().times)
        {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn synchronize_rejects_unknown_channel() {
        let log = smooth_log(50.0, 1.0);
        let mut offsets = HashMap::new();
        offsets.insert("nope".to_string(), 0.1);
        assert!(synchronize(&log, &offsets).is_err());
    }

    #[test]
    fn resample_recovers_known_function() {
        // 120 Hz samples of a smooth function resampled to 100 Hz: both the
        // value and the analytic derivative must track the ground truth.
        let log = smooth_log(120.0, 2.0);
        let traj = resample_to_timestep(&log, 0.01).unwrap();
        assert_eq!(traj.state_dim(), 2);
        let mut max_pos_err: f64 = 0.0;
        let mut max_vel_err: f64 = 0.0;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            max_pos_err = max_pos_err.max((s[0] - (1.7 * t).sin() * 0.5).abs());
            max_vel_err = max_vel_err.max((s[1] - 1.7 * (1.7 * t).cos() * 0.5).abs());
        }
        assert!(max_pos_err < 1e-3, "position error {max_pos_err}");
        assert!(max_vel_err < 1e-3, "velocity error {max_vel_err}");
    }

    #[test]
    fn resample_keeps_grid_aligned_values() {
        // channel already on the grid with linear values: exact at shared
        // timestamps
        let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.01).collect();
        let vals: Vec<f64> = times.iter().map(|t| 3.0 * t - 1.0).collect();
        let log = SensorLog::new(vec![
            scalar_channel("p", ChannelRole::Position, times.clone(), vals.clone()),
            scalar_channel("a", ChannelRole::Action, times.clone(), vals.clone()),
        ])
        .unwrap();
        let traj = resample_to_timestep(&log, 0.01).unwrap();
        assert_eq!(traj.states.len(), 51);
        for (i, s) in traj.states.iter().enumerate() {
            assert_abs_diff_eq!(s[0], vals[i], epsilon = 1e-12);
        }
        for (i, a) in traj.actions.iter().enumerate() {
            assert_abs_diff_eq!(a[0], vals[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn actions_are_zero_order_held() {
        let log = SensorLog::new(vec![
            scalar_channel(
                "p",
                ChannelRole::Position,
                (0..=10).map(|i| i as f64 * 0.1).collect(),
                (0..=10).map(|i| i as f64).collect(),
            ),
            scalar_channel(
                "a",
                ChannelRole::Action,
                vec![0.0, 0.45, 0.8],
                vec![1.0, 2.0, 3.0],
            ),
        ])
        .unwrap();
        let traj = resample_to_timestep(&log, 0.1).unwrap();
        // common window ends at the action channel's last sample (0.8),
        // giving 9 grid states; commands switch at 0.45 and 0.8
        assert_eq!(traj.states.len(), 9);
        assert_eq!(
            traj.actions.iter().map(|a| a[0]).collect::<Vec<_>>(),
            vec![1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0]
        );
    }

    #[test]
    fn disjoint_windows_are_rejected() {
        let log = SensorLog::new(vec![
            scalar_channel(
                "p",
                ChannelRole::Position,
                vec![0.0, 0.1, 0.2],
                vec![0.0, 1.0, 2.0],
            ),
            scalar_channel(
                "a",
                ChannelRole::Action,
                vec![5.0, 5.1, 5.2],
                vec![0.0, 1.0, 2.0],
            ),
        ])
        .unwrap();
        assert!(matches!(
            resample_to_timestep(&log, 0.01),
            Err(Error::NoCommonWindow)
        ));
    }

    #[test]
    fn resample_after_synchronize_is_deterministic() {
        let log = smooth_log(120.0, 1.5);
        let mut offsets = HashMap::new();
        offsets.insert("pos".to_string(), 0.05);
        let a = resample_to_timestep(&synchronize(&log, &offsets).unwrap(), 0.01).unwrap();
        let b = resample_to_timestep(&synchronize(&log, &offsets).unwrap(), 0.01).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn offset_estimator_finds_injected_shift() {
        // same smooth signal on two channels, one delayed by 70 ms
        let times_a: Vec<f64> = (0..=400).map(|i| i as f64 * 0.005).collect();
        let times_b: Vec<f64> = times_a.iter().map(|t| t + 0.07).collect();
        let signal = |t: f64| (2.0 * t).sin() + 0.3 * (5.3 * t).cos();
        let log = SensorLog::new(vec![
            scalar_channel(
                "a",
                ChannelRole::Position,
                times_a.clone(),
                times_a.iter().map(|&t| signal(t)).collect(),
            ),
            scalar_channel(
                "b",
                ChannelRole::Position,
                times_b,
                times_a.iter().map(|&t| signal(t)).collect(),
            ),
        ])
        .unwrap();
        let est = estimate_offset(&log, "a", "b").unwrap();
        assert!((est - (-0.07)).abs() < 0.01, "estimated {est}");
    }

    #[test]
    fn quaternion_channels_must_be_unit_norm() {
        let bad = Channel {
            name: "q".into(),
            role: ChannelRole::Quaternion,
            times: vec![0.0, 1.0],
            values: vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.9, 0.0, 0.0, 0.0]],
        };
        assert!(SensorLog::new(vec![bad]).is_err());
    }

    #[test]
    fn quaternion_resampling_renormalizes() {
        let n = 60;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * 0.02).collect();
        let quats: Vec<Vec<f64>> = times
            .iter()
            .map(|t| {
                let half = 0.8 * t / 2.0;
                vec![half.cos(), 0.0, 0.0, half.sin()]
            })
            .collect();
        let log = SensorLog::new(vec![
            Channel {
                name: "q".into(),
                role: ChannelRole::Quaternion,
                times: times.clone(),
                values: quats,
            },
            scalar_channel(
                "a",
                ChannelRole::Action,
                times.clone(),
                vec![0.0; times.len()],
            ),
        ])
        .unwrap();
        let traj = resample_to_timestep(&log, 0.013).unwrap();
        assert_eq!(traj.state_dim(), 4);
        for s in &traj.states {
            let norm = s.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
    }
}

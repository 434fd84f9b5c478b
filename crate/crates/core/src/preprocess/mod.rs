//! Turning raw asynchronous sensor logs into simulator-aligned trajectories:
//! synchronization, Akima resampling, spline-derivative velocities and
//! orientation residuals.

mod akima;
mod quat;
mod sensor;

pub use akima::{fit_akima, AkimaSpline};
pub use quat::{quaternion_angle_residual, symmetrize_orientation_samples};
pub use sensor::{
    estimate_offset, resample_to_timestep, synchronize, Channel, ChannelRole, SensorLog,
};

//! Contact time, rebound velocity and peak force of the first impact.

use serde::{Deserialize, Serialize};

use super::observed::ObservedTrajectory;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::params::VehicleParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactMetrics {
    /// s
    pub contact_time: f64,
    /// Largest outward normal speed between the start of the first contact
    /// and the start of the next one, m/s.
    pub rebound_velocity: f64,
    /// N
    pub peak_normal_force: f64,
    /// m/s²
    pub peak_acceleration: f64,
}

/// Metrics of the first contact episode of a simulated trajectory, where an
/// episode is a run of samples with an active contact force.
pub fn contact_metrics(traj: &Trajectory, vehicle: &VehicleParams) -> Result<ContactMetrics> {
    let samples = &traj.samples;
    let start = samples.iter().position(|s| s.force.active).ok_or(Error::NoContact)?;
    let obstacle = samples[start].contact_obstacle.expect("active contact has an obstacle");
    let frame = traj.frames[obstacle];
    let end = samples[start..]
        .iter()
        .position(|s| !s.force.active)
        .map_or(samples.len() - 1, |k| start + k);
    let next_start = samples[end..]
        .iter()
        .position(|s| s.force.active)
        .map_or(samples.len(), |k| end + k);

    // The sample at `start` is the first one produced by a contact step;
    // the episode began at the previous sample time.
    let t0 = samples[start - 1].t;
    let t1 = samples[end - 1].t;
    let peak_normal_force = samples[start..end].iter().map(|s| s.force.lambda_x).fold(0.0, f64::max);
    let rebound_velocity = samples[start..next_start]
        .iter()
        .map(|s| frame.normal().dot(&s.state.velocity))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ContactMetrics {
        contact_time: t1 - t0,
        rebound_velocity,
        peak_normal_force,
        peak_acceleration: peak_normal_force / vehicle.mass,
    })
}

/// Metrics of the first episode with non-positive gap in an observed trace.
/// Crossing times are linearly interpolated between samples; the peak
/// acceleration is the largest finite-difference normal acceleration in
/// the episode.
pub fn observed_metrics(obs: &ObservedTrajectory, vehicle: &VehicleParams) -> Result<ContactMetrics> {
    let s = &obs.samples;
    let crossing = |i: usize| {
        let (a, b) = (&s[i - 1], &s[i]);
        if a.gap == b.gap {
            return b.t;
        }
        a.t + (b.t - a.t) * a.gap / (a.gap - b.gap)
    };
    let start = s.iter().position(|p| p.gap <= 0.0).ok_or(Error::NoContact)?;
    let t_in = if start == 0 { s[0].t } else { crossing(start) };
    let end = s[start..].iter().position(|p| p.gap > 0.0).map(|k| start + k);
    let t_out = end.map_or(obs.duration(), crossing);
    let after = end.unwrap_or(s.len());
    let next_start = s[after..]
        .iter()
        .position(|p| p.gap <= 0.0)
        .map_or(s.len(), |k| after + k);

    let rebound_velocity = s[start..next_start]
        .iter()
        .map(|p| p.gap_rate)
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = start.saturating_sub(1);
    let hi = after.min(s.len() - 1);
    let peak_acceleration = (lo..hi)
        .map(|i| (s[i + 1].gap_rate - s[i].gap_rate) / (s[i + 1].t - s[i].t))
        .fold(0.0, f64::max);
    Ok(ContactMetrics {
        contact_time: t_out - t_in,
        rebound_velocity,
        peak_normal_force: peak_acceleration * vehicle.mass,
        peak_acceleration,
    })
}

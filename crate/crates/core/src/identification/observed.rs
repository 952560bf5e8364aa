//! Measured (or synthesized) collision-frame traces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

/// One tracked sample. `lateral` holds `(y†, ẏ†, z†, ż†)` when the tracker
/// resolved the tangential motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedSample {
    pub t: f64,
    pub gap: f64,
    pub gap_rate: f64,
    pub lateral: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedTrajectory {
    pub samples: Vec<ObservedSample>,
    pub source: String,
}

/// Minimum number of samples accepted for identification or validation.
pub const MIN_SAMPLES: usize = 10;

impl ObservedTrajectory {
    pub fn new(samples: Vec<ObservedSample>, source: impl Into<String>) -> Result<Self> {
        let obs = Self {
            samples,
            source: source.into(),
        };
        obs.validate()?;
        Ok(obs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.len() < MIN_SAMPLES {
            return Err(Error::InvalidObservation(format!(
                "need at least {MIN_SAMPLES} samples, got {}",
                self.samples.len()
            )));
        }
        if !self.samples.windows(2).all(|w| w[1].t > w[0].t) {
            return Err(Error::InvalidObservation(
                "timestamps must be strictly increasing".into(),
            ));
        }
        let finite = self.samples.iter().all(|s| {
            s.t.is_finite()
                && s.gap.is_finite()
                && s.gap_rate.is_finite()
                && s.lateral.is_none_or(|l| l.iter().all(|v| v.is_finite()))
        });
        if !finite {
            return Err(Error::InvalidObservation("non-finite sample".into()));
        }
        let lateral = self.samples[0].lateral.is_some();
        if self.samples.iter().any(|s| s.lateral.is_some() != lateral) {
            return Err(Error::InvalidObservation(
                "lateral channels must be present in every sample or none".into(),
            ));
        }
        Ok(())
    }

    pub fn has_lateral(&self) -> bool {
        self.samples.first().is_some_and(|s| s.lateral.is_some())
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Projects a simulated trajectory onto the frame of obstacle
    /// `obstacle`, keeping every `stride`-th sample.
    pub fn from_trajectory(traj: &Trajectory, obstacle: usize, stride: usize, source: impl Into<String>) -> Self {
        let frame = traj.frames[obstacle];
        let samples = traj
            .samples
            .iter()
            .step_by(stride.max(1))
            .map(|s| {
                let cf = frame.to_frame(&s.state);
                ObservedSample {
                    t: s.t,
                    gap: cf.position.x,
                    gap_rate: cf.velocity.x,
                    lateral: Some([cf.position.y, cf.velocity.y, cf.position.z, cf.velocity.z]),
                }
            })
            .collect();
        Self {
            samples,
            source: source.into(),
        }
    }

    /// Linear interpolation of a simulated trajectory at the given times,
    /// expressed in the frame of obstacle `obstacle`. Times outside the
    /// simulated span are dropped.
    pub fn sample_trajectory(traj: &Trajectory, obstacle: usize, times: &[f64], with_lateral: bool) -> Self {
        let frame = traj.frames[obstacle];
        let last = traj.last().t;
        let samples = times
            .iter()
            .filter(|&&t| t >= 0.0 && t <= last + 1e-12)
            .map(|&t| {
                let x = (t / traj.h).max(0.0);
                let i = (x.floor() as usize).min(traj.samples.len() - 1);
                let j = (i + 1).min(traj.samples.len() - 1);
                let w = if i == j {
                    0.0
                } else {
                    (t - traj.samples[i].t) / (traj.samples[j].t - traj.samples[i].t)
                };
                let a = frame.to_frame(&traj.samples[i].state);
                let b = frame.to_frame(&traj.samples[j].state);
                let lerp = |p: f64, q: f64| p + (q - p) * w;
                ObservedSample {
                    t,
                    gap: lerp(a.position.x, b.position.x),
                    gap_rate: lerp(a.velocity.x, b.velocity.x),
                    lateral: with_lateral.then(|| {
                        [
                            lerp(a.position.y, b.position.y),
                            lerp(a.velocity.y, b.velocity.y),
                            lerp(a.position.z, b.position.z),
                            lerp(a.velocity.z, b.velocity.z),
                        ]
                    }),
                }
            })
            .collect();
        Self {
            samples,
            source: "simulation".into(),
        }
    }

    pub fn without_lateral(mut self) -> Self {
        for s in &mut self.samples {
            s.lateral = None;
        }
        self
    }

    /// Adds zero-mean Gaussian noise to the normal velocity channel with a
    /// standard deviation of `relative` times the largest observed speed.
    pub fn with_velocity_noise(mut self, relative: f64, seed: u64) -> Self {
        let peak = self.samples.iter().map(|s| s.gap_rate.abs()).fold(0.0, f64::max);
        let std = relative * peak;
        if std > 0.0 {
            let normal = Normal::new(0.0, std).expect("finite std");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for s in &mut self.samples {
                s.gap_rate += normal.sample(&mut rng);
            }
        }
        self
    }
}

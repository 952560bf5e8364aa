//! Contact-coefficient identification and held-out validation.

use serde::{Deserialize, Serialize};

use super::metrics::observed_metrics;
use super::observed::ObservedTrajectory;
use super::simplex::{minimize, SimplexOptions};
use crate::contact::StepConfig;
use crate::dynamics::{simulate, Scenario};
use crate::error::{invalid, Error, Result};
use crate::params::ContactParams;

/// Weight of the velocity RMSE relative to the position RMSE, s.
pub const VELOCITY_WEIGHT: f64 = 0.1;

/// Search box for the contact coefficients. Friction constants are only
/// fitted when bounds are given and the observation carries lateral
/// channels; otherwise they are held at the scenario's values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBounds {
    pub k: [f64; 2],
    pub f: [f64; 2],
    #[serde(default)]
    pub mu: Option<[f64; 2]>,
    #[serde(default)]
    pub nu: Option<[f64; 2]>,
    /// Grid points per fitted dimension for the coarse search.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_grid_points() -> usize {
    7
}

impl ParamBounds {
    pub fn new(k: [f64; 2], f: [f64; 2]) -> Self {
        Self {
            k,
            f,
            mu: None,
            nu: None,
            grid_points: default_grid_points(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, b: [f64; 2], min: f64, strict: bool| {
            let ok_low = if strict { b[0] > min } else { b[0] >= min };
            if !(b[0].is_finite() && b[1].is_finite() && ok_low && b[1] > b[0]) {
                return Err(invalid(
                    format!("bounds.{name}"),
                    format!("need finite lo < hi with lo {} {min}", if strict { ">" } else { ">=" }),
                ));
            }
            Ok(())
        };
        check("k", self.k, 0.0, true)?;
        check("f", self.f, 0.0, false)?;
        if let Some(b) = self.mu {
            check("mu", b, 0.0, false)?;
        }
        if let Some(b) = self.nu {
            check("nu", b, 0.0, false)?;
        }
        if self.grid_points < 2 {
            return Err(invalid("bounds.grid_points", "must be >= 2"));
        }
        Ok(())
    }

    pub fn contains(&self, p: &ContactParams) -> bool {
        let inside = |b: [f64; 2], v: f64| v >= b[0] && v <= b[1];
        inside(self.k, p.k)
            && inside(self.f, p.f)
            && self.mu.is_none_or(|b| inside(b, p.mu))
            && self.nu.is_none_or(|b| inside(b, p.nu))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceError {
    pub rmse_position: f64,
    pub rmse_velocity: f64,
    /// RMSE of `y†` and `ẏ†` when both traces carry lateral channels.
    pub rmse_lateral: Option<[f64; 2]>,
    /// RMSE of `z†` and `ż†`, reported apart from the fit objective.
    pub rmse_vertical: Option<[f64; 2]>,
    pub samples: usize,
}

impl TraceError {
    pub fn objective(&self, use_lateral: bool) -> f64 {
        let mut v = self.rmse_position + VELOCITY_WEIGHT * self.rmse_velocity;
        if use_lateral {
            if let Some([p, d]) = self.rmse_lateral {
                v += p + VELOCITY_WEIGHT * d;
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ContactParams,
    pub rmse_position: f64,
    pub rmse_velocity: f64,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective after the grid search and after each refinement step.
    pub history: Vec<f64>,
}

/// Compares an observation with a simulation sampled at the same times.
pub fn trace_error(observed: &ObservedTrajectory, simulated: &ObservedTrajectory) -> Result<TraceError> {
    let n = simulated.samples.len().min(observed.samples.len());
    if n == 0 {
        return Err(Error::NoOverlap);
    }
    let pairs = || observed.samples.iter().zip(&simulated.samples).take(n);
    let rms = |f: &dyn Fn(&super::ObservedSample, &super::ObservedSample) -> f64| {
        (pairs().map(|(o, s)| f(o, s).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let both_lateral = observed.has_lateral() && simulated.has_lateral();
    let lat = |k: usize| rms(&|o, s| o.lateral.unwrap()[k] - s.lateral.unwrap()[k]);
    Ok(TraceError {
        rmse_position: rms(&|o, s| o.gap - s.gap),
        rmse_velocity: rms(&|o, s| o.gap_rate - s.gap_rate),
        rmse_lateral: both_lateral.then(|| [lat(0), lat(1)]),
        rmse_vertical: both_lateral.then(|| [lat(2), lat(3)]),
        samples: n,
    })
}

/// Simulates `scenario` with `params` over the observed time span and
/// samples the result at the observed times in the frame of obstacle 0.
pub fn simulate_observation(
    scenario: &Scenario,
    params: &ContactParams,
    observed: &ObservedTrajectory,
    cfg: &StepConfig,
) -> Result<ObservedTrajectory> {
    let times = observed.times();
    if times.iter().all(|&t| t < 0.0) {
        return Err(Error::NoOverlap);
    }
    let mut sc = scenario.with_contact_params(params);
    sc.duration = observed.duration().max(0.0) + cfg.h;
    let traj = simulate(&sc, cfg)?;
    let sim = ObservedTrajectory::sample_trajectory(&traj, 0, &times, observed.has_lateral());
    if sim.samples.is_empty() {
        return Err(Error::NoOverlap);
    }
    // Observed samples before t = 0 cannot be compared.
    let skip = times.iter().take_while(|&&t| t < 0.0).count();
    if skip > 0 {
        return Err(Error::NoOverlap);
    }
    Ok(sim)
}

struct Axes {
    names: Vec<&'static str>,
    bounds: Vec<[f64; 2]>,
}

impl Axes {
    fn to_params(&self, base: &ContactParams, unit: &[f64]) -> ContactParams {
        let mut p = base.clone();
        for ((name, b), u) in self.names.iter().zip(&self.bounds).zip(unit) {
            let v = b[0] + (b[1] - b[0]) * u;
            match *name {
                "k" => p.k = v,
                "f" => p.f = v,
                "mu" => p.mu = v,
                "nu" => p.nu = v,
                _ => unreachable!(),
            }
        }
        p
    }
}

/// Coarse grid search over the bounds box followed by simplex refinement
/// of `position RMSE + 0.1 s · velocity RMSE`.
pub fn fit_contact_params(
    observed: &ObservedTrajectory,
    scenario: &Scenario,
    bounds: &ParamBounds,
    cfg: &StepConfig,
) -> Result<FitResult> {
    observed.validate()?;
    bounds.validate()?;
    cfg.validate()?;
    let mode = scenario.initial_mode();
    let obstacle = scenario
        .obstacles
        .first()
        .ok_or_else(|| invalid("obstacles", "identification needs a contact plane"))?;
    let base = obstacle.contact.params(mode);

    let use_lateral = observed.has_lateral();
    let mut axes = Axes {
        names: vec!["k", "f"],
        bounds: vec![bounds.k, bounds.f],
    };
    if use_lateral {
        if let Some(b) = bounds.mu {
            axes.names.push("mu");
            axes.bounds.push(b);
        }
        if let Some(b) = bounds.nu {
            axes.names.push("nu");
            axes.bounds.push(b);
        }
    }
    let dims = axes.names.len();

    let mut evaluations = 0usize;
    let mut objective = |unit: &[f64]| -> f64 {
        evaluations += 1;
        let p = axes.to_params(&base, unit);
        match simulate_observation(scenario, &p, observed, cfg).and_then(|sim| trace_error(observed, &sim)) {
            Ok(e) => e.objective(use_lateral),
            Err(_) => f64::INFINITY,
        }
    };

    // Coarse grid, first-found minimum wins ties.
    let g = bounds.grid_points;
    let mut best = (vec![0.0; dims], f64::INFINITY);
    let total = g.pow(dims as u32);
    for idx in 0..total {
        let mut rem = idx;
        let unit: Vec<f64> = (0..dims)
            .map(|_| {
                let i = rem % g;
                rem /= g;
                i as f64 / (g - 1) as f64
            })
            .collect();
        let v = objective(&unit);
        if v < best.1 {
            best = (unit, v);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::NoOverlap);
    }

    let opts = SimplexOptions {
        initial_step: 0.5 / (g - 1) as f64,
        ..SimplexOptions::default()
    };
    let refined = minimize(&mut objective, &best.0, opts);
    let (unit, value) = if refined.value <= best.1 {
        (refined.x.clone(), refined.value)
    } else {
        best.clone()
    };
    let mut history = vec![best.1];
    history.extend(refined.history.iter().map(|v| v.min(best.1)));

    let tail = &history[history.len().saturating_sub(10)..];
    let first = tail[0];
    let last = *tail.last().expect("non-empty");
    let converged = first <= 0.0 || (first - last) / first < 1e-4;

    let params = axes.to_params(&base, &unit);
    let sim = simulate_observation(scenario, &params, observed, cfg)?;
    let err = trace_error(observed, &sim)?;
    Ok(FitResult {
        params,
        rmse_position: err.rmse_position,
        rmse_velocity: err.rmse_velocity,
        objective: value,
        iterations: refined.iterations,
        evaluations,
        converged,
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakAccuracy {
    pub channel: String,
    pub simulated: f64,
    pub observed: f64,
    /// `1 − |simulated − observed| / |observed|`.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub params: ContactParams,
    pub error: TraceError,
    pub peaks: Vec<PeakAccuracy>,
}

impl ValidationReport {
    pub fn peak(&self, channel: &str) -> Option<&PeakAccuracy> {
        self.peaks.iter().find(|p| p.channel == channel)
    }
}

fn accuracy(sim: f64, obs: f64) -> f64 {
    if obs == 0.0 {
        if sim == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - (sim - obs).abs() / obs.abs()
    }
}

/// Simulates the held-out setup with `params` and scores it against the
/// observation: full-trace RMSE plus peak-value accuracy of the rebound
/// velocity, contact time and peak acceleration.
pub fn validate_params(
    params: &ContactParams,
    heldout: &ObservedTrajectory,
    scenario: &Scenario,
    cfg: &StepConfig,
) -> Result<ValidationReport> {
    params.validate()?;
    heldout.validate()?;
    cfg.validate()?;
    let sim = simulate_observation(scenario, params, heldout, cfg)?;
    let error = trace_error(heldout, &sim)?;
    let m_obs = observed_metrics(heldout, &scenario.vehicle)?;
    let m_sim = observed_metrics(&sim, &scenario.vehicle)?;
    let peaks = [
        ("rebound_velocity", m_sim.rebound_velocity, m_obs.rebound_velocity),
        ("contact_time", m_sim.contact_time, m_obs.contact_time),
        ("peak_acceleration", m_sim.peak_acceleration, m_obs.peak_acceleration),
    ]
    .into_iter()
    .map(|(channel, simulated, observed)| PeakAccuracy {
        channel: channel.into(),
        simulated,
        observed,
        accuracy: accuracy(simulated, observed),
    })
    .collect();
    Ok(ValidationReport {
        params: params.clone(),
        error,
        peaks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::drop_test_scenario;
    use crate::params::{mode_params, Mode, Surface};
    use nalgebra::Vector3;

    #[test]
    fn bounds_validation_names_field() {
        let bad = [
            ParamBounds::new([0.0, 10.0], [0.0, 1.0]),
            ParamBounds::new([10.0, 5.0], [0.0, 1.0]),
            ParamBounds::new([1.0, 5.0], [-1.0, 1.0]),
        ];
        for (b, field) in bad.iter().zip(["bounds.k", "bounds.k", "bounds.f"]) {
            match b.validate() {
                Err(Error::InvalidParameter { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{other:?}"),
            }
        }
        let mut b = ParamBounds::new([1.0, 5.0], [0.0, 1.0]);
        b.grid_points = 1;
        assert!(b.validate().is_err());
    }

    #[test]
    fn contains_checks_optional_axes() {
        let mut b = ParamBounds::new([1000.0, 6000.0], [10.0, 20.0]);
        let p = mode_params(Mode::Rigid, Surface::Concrete);
        assert!(b.contains(&p));
        b.mu = Some([0.5, 1.0]);
        assert!(!b.contains(&p));
    }

    #[test]
    fn objective_weights_velocity() {
        let e = TraceError {
            rmse_position: 0.01,
            rmse_velocity: 0.2,
            rmse_lateral: Some([0.1, 1.0]),
            rmse_vertical: None,
            samples: 10,
        };
        assert!((e.objective(false) - 0.03).abs() < 1e-15);
        assert!((e.objective(true) - 0.23).abs() < 1e-15);
    }

    #[test]
    fn friction_fitted_from_lateral_channels() {
        let truth = mode_params(Mode::Rigid, Surface::Concrete);
        let mut sc = drop_test_scenario(0.05, Mode::Rigid, Surface::Concrete).unwrap();
        sc.initial_state.velocity = Vector3::new(0.0, 0.5, 0.0);
        sc.duration = 0.3;
        let cfg = StepConfig::default();
        let traj = simulate(&sc, &cfg).unwrap();
        let obs = ObservedTrajectory::from_trajectory(&traj, 0, 10, "sliding drop");
        assert!(obs.has_lateral());

        let mut start = sc.with_contact_params(&ContactParams {
            mu: 1.0,
            ..truth.clone()
        });
        start.duration = sc.duration;
        let mut bounds = ParamBounds::new([4000.0, 7000.0], [10.0, 20.0]);
        bounds.mu = Some([0.05, 1.0]);
        let fit = fit_contact_params(&obs, &start, &bounds, &cfg).unwrap();
        assert!((fit.params.mu - truth.mu).abs() < 0.01, "mu {}", fit.params.mu);
        assert!(fit.params.k > 5000.0 && fit.params.k < 6000.0);

        let without = fit_contact_params(&obs.without_lateral(), &start, &bounds, &cfg).unwrap();
        assert_eq!(without.params.mu, 1.0);
    }
}

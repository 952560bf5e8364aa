//! Free-flight propagation and the scenario simulator.
//!
//! [`simulate`] sequences free flight, contact, controller action and mode
//! switches on a fixed time grid `t_i = i·h`.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::contact::{step_contact, ContactForce, StepConfig};
use crate::controller::{estimate_external_force, ControllerConfig, FlightController, Mission};
use crate::error::{invalid, Error, Result};
use crate::frame::{make_collision_frame, CollisionFrame, State};
use crate::params::{mode_params, ContactParams, Mode, Surface, VehicleParams};

/// Rest offset of the center of mass above the ground at first guard contact.
pub const DROP_REST_OFFSET: f64 = 0.2;

/// Implicit-Euler free-flight step with linear drag opposing the velocity.
///
/// `input_accel` carries every applied acceleration, gravity included.
pub fn step_free(state: &State, input_accel: &Vector3<f64>, vehicle: &VehicleParams, h: f64) -> Result<State> {
    if h.is_nan() || h <= 0.0 {
        return Err(invalid("h", "must be > 0"));
    }
    if !state.is_finite() || input_accel.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("free-flight inputs"));
    }
    let velocity = (state.velocity + input_accel * h).zip_map(&vehicle.drag_vector(), |v, b| v / (1.0 + h * b));
    Ok(State {
        position: state.position + velocity * h,
        velocity,
    })
}

/// Source of the contact coefficients of an obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactModel {
    Preset(Surface),
    Custom {
        rigid: ContactParams,
        flexible: ContactParams,
    },
}

impl ContactModel {
    pub fn params(&self, mode: Mode) -> ContactParams {
        match self {
            ContactModel::Preset(surface) => mode_params(mode, *surface),
            ContactModel::Custom { rigid, flexible } => match mode {
                Mode::Rigid => rigid.clone(),
                Mode::Flexible => flexible.clone(),
            },
        }
    }

    /// Replaces the coefficients used in `mode`, keeping the other mode.
    pub fn with_params(&self, params: ContactParams) -> ContactModel {
        let mut rigid = self.params(Mode::Rigid);
        let mut flexible = self.params(Mode::Flexible);
        match params.mode {
            Mode::Rigid => rigid = params,
            Mode::Flexible => flexible = params,
        }
        ContactModel::Custom { rigid, flexible }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub name: String,
    pub frame: CollisionFrame,
    pub contact: ContactModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    DropTest,
    FlightCollision,
    Plan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSetup {
    pub config: ControllerConfig,
    pub mission: Mission,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub initial_state: State,
    pub obstacles: Vec<Obstacle>,
    /// Mode before the first collision, then after each detected collision.
    pub mode_schedule: Vec<Mode>,
    pub duration: f64,
    pub vehicle: VehicleParams,
    pub controller: Option<ControllerSetup>,
    /// Unit vector along which gravity accelerates the vehicle.
    pub gravity_axis: Vector3<f64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(invalid("duration", "must be finite and >= 0"));
        }
        if !self.initial_state.is_finite() {
            return Err(Error::NonFinite("initial_state"));
        }
        if self.mode_schedule.is_empty() {
            return Err(invalid("mode_schedule", "needs at least the initial mode"));
        }
        if self.kind == ScenarioKind::DropTest && self.obstacles.is_empty() {
            return Err(invalid("obstacles", "drop tests need a ground plane"));
        }
        if (self.gravity_axis.norm() - 1.0).abs() > 1e-9 {
            return Err(invalid("gravity_axis", "must be a unit vector"));
        }
        self.vehicle.validate()?;
        for (i, o) in self.obstacles.iter().enumerate() {
            for mode in Mode::ALL {
                o.contact.params(mode).validate().map_err(|e| match e {
                    Error::InvalidParameter { field, reason } => Error::InvalidParameter {
                        field: format!("obstacles[{i}].{mode}.{field}"),
                        reason,
                    },
                    other => other,
                })?;
            }
        }
        if let Some(c) = &self.controller {
            c.config.validate()?;
        }
        Ok(())
    }

    /// Replaces the coefficients of every obstacle for the given mode.
    pub fn with_contact_params(&self, params: &ContactParams) -> Scenario {
        let mut s = self.clone();
        for o in &mut s.obstacles {
            o.contact = o.contact.with_params(params.clone());
        }
        s
    }

    pub fn initial_mode(&self) -> Mode {
        self.mode_schedule[0]
    }
}

/// Unpowered drop onto a concrete-like ground plane from `height` above
/// first guard contact.
pub fn drop_test_scenario(height: f64, mode: Mode, surface: Surface) -> Result<Scenario> {
    if !(height >= 0.0 && height.is_finite()) {
        return Err(invalid("height", "must be finite and >= 0"));
    }
    let frame = make_collision_frame(Vector3::zeros(), Vector3::z(), Vector3::x(), DROP_REST_OFFSET)?;
    Ok(Scenario {
        kind: ScenarioKind::DropTest,
        initial_state: State::at_rest(Vector3::new(0.0, 0.0, DROP_REST_OFFSET + height)),
        obstacles: vec![Obstacle {
            name: "ground".into(),
            frame,
            contact: ContactModel::Preset(surface),
        }],
        mode_schedule: vec![mode],
        duration: 1.0,
        vehicle: VehicleParams::default(),
        controller: None,
        gravity_axis: -Vector3::z(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ContactStart,
    ContactEnd,
    ModeSwitch,
    CollisionDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    /// Obstacle index for contact events, collision index for detections,
    /// new mode number for switches.
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: State,
    /// Collision-frame force of the obstacle in contact.
    pub force: ContactForce,
    pub contact_obstacle: Option<usize>,
    pub setpoint: Option<Vector3<f64>>,
    pub mode: Mode,
    /// External force estimate from the step ending at `t`.
    pub estimate: Vector3<f64>,
}

impl Sample {
    /// Applied contact force in the inertial frame.
    pub fn inertial_force(&self, frames: &[CollisionFrame]) -> Vector3<f64> {
        match self.contact_obstacle {
            Some(i) if self.force.active => self.force.inertial(&frames[i]),
            _ => Vector3::zeros(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub frames: Vec<CollisionFrame>,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds the initial sample")
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

/// Runs a scenario to its duration, or until its mission completes.
pub fn simulate(scenario: &Scenario, cfg: &StepConfig) -> Result<Trajectory> {
    run(scenario, cfg, true)
}

/// Like [`simulate`] but keeps only the initial and final samples; events
/// are complete.
pub fn simulate_endpoints(scenario: &Scenario, cfg: &StepConfig) -> Result<Trajectory> {
    run(scenario, cfg, false)
}

fn run(scenario: &Scenario, cfg: &StepConfig, record: bool) -> Result<Trajectory> {
    scenario.validate()?;
    cfg.validate()?;
    let h = cfg.h;
    let vehicle = &scenario.vehicle;
    let gravity = scenario.gravity_axis * vehicle.gravity;
    let frames: Vec<CollisionFrame> = scenario.obstacles.iter().map(|o| o.frame).collect();
    let params: Vec<[ContactParams; 2]> = scenario
        .obstacles
        .iter()
        .map(|o| [o.contact.params(Mode::Rigid), o.contact.params(Mode::Flexible)])
        .collect();
    let param_for = |i: usize, mode: Mode| match mode {
        Mode::Rigid => &params[i][0],
        Mode::Flexible => &params[i][1],
    };

    let mut controller = scenario
        .controller
        .as_ref()
        .map(|c| FlightController::new(c.config.clone(), c.mission.clone()).with_drag(vehicle.drag_vector()));
    let mut noise = scenario.controller.as_ref().and_then(|c| {
        (c.config.force_noise_std > 0.0).then(|| {
            (
                ChaCha8Rng::seed_from_u64(c.config.noise_seed),
                Normal::new(0.0, c.config.force_noise_std).expect("validated std"),
            )
        })
    });

    let steps = (scenario.duration / h).round() as usize;
    let mut state = scenario.initial_state;
    let mut mode = scenario.initial_mode();
    // Reconfiguration requested by a detection takes effect once the
    // vehicle has left the contact that triggered it.
    let mut pending_mode: Option<Mode> = None;
    let mut samples = Vec::with_capacity(if record { steps + 1 } else { 2 });
    let mut events = Vec::new();
    samples.push(Sample {
        t: 0.0,
        state,
        force: ContactForce::NONE,
        contact_obstacle: None,
        setpoint: controller.as_ref().and_then(|c| c.setpoint()),
        mode,
        estimate: Vector3::zeros(),
    });
    let mut in_contact: Option<usize> = None;

    for i in 0..steps {
        let t = i as f64 * h;
        let t_next = (i + 1) as f64 * h;
        let command = match controller.as_mut() {
            Some(c) => {
                if c.is_done() {
                    break;
                }
                c.command(t, &state, vehicle.gravity, h)
            }
            None => Vector3::zeros(),
        };
        let input = command + gravity;

        let nearest = frames
            .iter()
            .enumerate()
            .map(|(k, f)| (k, f.gap(&state.position)))
            .filter(|(_, gap)| *gap <= 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k);

        let wrap = |e: Error| Error::Simulation { t, source: Box::new(e) };
        let (next, force) = match nearest {
            Some(k) => {
                let step = step_contact(&state, &frames[k], param_for(k, mode), vehicle, &input, cfg).map_err(wrap)?;
                (step.state, step.force)
            }
            None => (step_free(&state, &input, vehicle, h).map_err(wrap)?, ContactForce::NONE),
        };

        let active = nearest.filter(|_| force.active);
        if active != in_contact {
            if let Some(prev) = in_contact {
                events.push(Event {
                    t: t_next,
                    kind: EventKind::ContactEnd,
                    index: prev,
                });
            }
            if let Some(now) = active {
                events.push(Event {
                    t: t_next,
                    kind: EventKind::ContactStart,
                    index: now,
                });
            }
            in_contact = active;
        }

        // Acceleration the vehicle would have had without contact.
        let free_velocity = (state.velocity + input * h).zip_map(&vehicle.drag_vector(), |v, b| v / (1.0 + h * b));
        let measured = (next.velocity - state.velocity) / h;
        let commanded = (free_velocity - state.velocity) / h;
        let mut estimate = estimate_external_force(&measured, &commanded, vehicle, t_next);
        if let Some((rng, normal)) = noise.as_mut() {
            estimate.lambda_hat += Vector3::from_fn(|_, _| normal.sample(rng));
        }

        if let Some(c) = controller.as_mut() {
            if let Some(det) = c.observe(&estimate, &next.position) {
                events.push(Event {
                    t: t_next,
                    kind: EventKind::CollisionDetected,
                    index: det.collision,
                });
                if let Some(&new_mode) = scenario.mode_schedule.get(det.collision + 1) {
                    pending_mode = Some(new_mode);
                }
            }
        }
        if in_contact.is_none() {
            if let Some(new_mode) = pending_mode.take() {
                if new_mode != mode {
                    mode = new_mode;
                    events.push(Event {
                        t: t_next,
                        kind: EventKind::ModeSwitch,
                        index: mode.index() as usize,
                    });
                }
            }
        }

        state = next;
        if !record && samples.len() == 2 {
            samples.pop();
        }
        samples.push(Sample {
            t: t_next,
            state,
            force,
            contact_obstacle: nearest,
            setpoint: controller.as_ref().and_then(|c| c.setpoint()),
            mode,
            estimate: estimate.lambda_hat,
        });
    }

    Ok(Trajectory {
        h,
        frames,
        samples,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ballistic_step() {
        let s = State::new(Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0));
        let n = step_free(&s, &Vector3::zeros(), &VehicleParams::default(), 0.01).unwrap();
        assert_abs_diff_eq!(n.position.x, 0.01, epsilon = 1e-15);
        assert_eq!(n.velocity, s.velocity);
    }

    #[test]
    fn free_step_rejects_bad_input() {
        let s = State::at_rest(Vector3::zeros());
        let v = VehicleParams::default();
        assert!(step_free(&s, &Vector3::zeros(), &v, 0.0).is_err());
        assert!(step_free(&s, &Vector3::new(f64::NAN, 0.0, 0.0), &v, 1e-3).is_err());
    }

    #[test]
    fn drag_decay_matches_exponential() {
        // v' = a - b v with v(0) = 0 has v(t) = (a/b)(1 - e^{-bt}).
        let vehicle = VehicleParams {
            drag: [0.2, 0.4, 0.0],
            ..VehicleParams::default()
        };
        let a = Vector3::new(0.3, 0.2, 0.0);
        let h = 1e-4;
        let mut s = State::at_rest(Vector3::zeros());
        for _ in 0..10_000 {
            s = step_free(&s, &a, &vehicle, h).unwrap();
        }
        for (axis, b) in [(0usize, 0.2), (1, 0.4)] {
            let exact = a[axis] / b * (1.0 - (-b * 1.0f64).exp());
            assert!((s.velocity[axis] - exact).abs() / exact < 1e-3);
        }
    }

    #[test]
    fn zero_duration_has_single_sample() {
        let mut sc = drop_test_scenario(0.05, Mode::Rigid, Surface::Concrete).unwrap();
        sc.duration = 0.0;
        let tr = simulate(&sc, &StepConfig::default()).unwrap();
        assert_eq!(tr.samples.len(), 1);
    }

    #[test]
    fn drop_impact_speed() {
        let sc = drop_test_scenario(0.05, Mode::Rigid, Surface::Concrete).unwrap();
        let tr = simulate(&sc, &StepConfig::default()).unwrap();
        let start = tr.events_of(EventKind::ContactStart).next().unwrap().t;
        let idx = tr.samples.iter().position(|s| s.t >= start).unwrap();
        let v_impact = -tr.samples[idx - 1].state.velocity.z;
        let exact = (2.0 * 9.81 * 0.05f64).sqrt();
        assert!((v_impact - exact).abs() / exact < 5e-3, "{v_impact} vs {exact}");
        assert_abs_diff_eq!(exact, 0.99, epsilon = 0.01);
    }

    #[test]
    fn zero_height_starts_in_support() {
        let mut sc = drop_test_scenario(0.0, Mode::Rigid, Surface::Concrete).unwrap();
        sc.duration = 0.01;
        let tr = simulate(&sc, &StepConfig::default()).unwrap();
        assert!(tr.samples[1].force.active);
        assert_eq!(tr.events[0].kind, EventKind::ContactStart);
    }

    #[test]
    fn negative_height_rejected() {
        assert!(drop_test_scenario(-0.1, Mode::Rigid, Surface::Concrete).is_err());
    }

    #[test]
    fn contact_events_alternate() {
        let sc = drop_test_scenario(0.2, Mode::Flexible, Surface::Concrete).unwrap();
        let tr = simulate(&sc, &StepConfig::default()).unwrap();
        let kinds: Vec<EventKind> = tr.events.iter().map(|e| e.kind).collect();
        assert!(kinds.len() >= 2);
        for (i, k) in kinds.iter().enumerate() {
            let expect = if i % 2 == 0 {
                EventKind::ContactStart
            } else {
                EventKind::ContactEnd
            };
            assert_eq!(*k, expect);
        }
    }

    #[test]
    fn row_count_matches_duration() {
        let sc = drop_test_scenario(0.05, Mode::Rigid, Surface::Concrete).unwrap();
        let tr = simulate(&sc, &StepConfig::default()).unwrap();
        assert_eq!(tr.samples.len(), 10_001);
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }
}

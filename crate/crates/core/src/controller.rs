//! Collision detection from the estimated external force, force-proportional
//! recovery setpoints, and a cascaded position/velocity loop standing in for
//! the flight stack's low-level controller.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::frame::{CollisionFrame, State};
use crate::params::VehicleParams;

/// Gains of the cascaded loop: proportional position loop producing a
/// velocity reference, PID velocity loop producing an acceleration command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoopGains {
    /// 1/s
    pub pos_p: f64,
    /// 1/s
    pub vel_p: f64,
    /// 1/s²
    pub vel_i: f64,
    /// dimensionless
    pub vel_d: f64,
    /// Per-axis clamp on the velocity reference, m/s.
    pub vel_limit: f64,
    /// Clamp on the velocity-error integral, m.
    pub integral_limit: f64,
}

impl Default for LoopGains {
    // vel_p = 4 * pos_p places both closed-loop poles of the point mass at
    // -2 * pos_p (critical damping); the integral term is kept small.
    fn default() -> Self {
        Self {
            pos_p: 1.5,
            vel_p: 6.0,
            vel_i: 0.2,
            vel_d: 0.0,
            vel_limit: 2.0,
            integral_limit: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    /// Collision detection threshold on the planar force estimate, N.
    pub lambda_th: f64,
    /// Recovery gains `(α_x, α_y)`, m/N.
    pub alpha: [f64; 2],
    pub gains: LoopGains,
    /// Per-axis saturation of the feedback acceleration, m/s².
    pub accel_limit: f64,
    /// Minimum time between two registered collisions, s.
    pub rearm_time: f64,
    /// Standard deviation of additive force-estimate noise, N. Zero disables it.
    pub force_noise_std: f64,
    pub noise_seed: u64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            lambda_th: 5.0,
            alpha: [0.12, 0.025],
            gains: LoopGains::default(),
            accel_limit: 5.0,
            rearm_time: 0.5,
            force_noise_std: 0.0,
            noise_seed: 0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_th > 0.0 && self.lambda_th.is_finite()) {
            return Err(invalid("controller.lambda_th", "must be finite and > 0"));
        }
        if self.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(invalid("controller.alpha", "components must be finite and >= 0"));
        }
        if !(self.accel_limit > 0.0 && self.accel_limit.is_finite()) {
            return Err(invalid("controller.accel_limit", "must be finite and > 0"));
        }
        if !(self.rearm_time.is_finite() && self.rearm_time >= 0.0) {
            return Err(invalid("controller.rearm_time", "must be finite and >= 0"));
        }
        let g = &self.gains;
        let gains = [g.pos_p, g.vel_p, g.vel_i, g.vel_d, g.vel_limit, g.integral_limit];
        if gains.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || g.vel_limit <= 0.0 {
            return Err(invalid("controller.gains", "must be finite and >= 0, vel_limit > 0"));
        }
        if !(self.force_noise_std.is_finite() && self.force_noise_std >= 0.0) {
            return Err(invalid("controller.force_noise_std", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// External force estimate in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceEstimate {
    pub lambda_hat: Vector3<f64>,
    pub t: f64,
}

/// `m · (measured − commanded)`, where `commanded` is the acceleration the
/// vehicle would have had without external contact.
pub fn estimate_external_force(
    measured_accel: &Vector3<f64>,
    commanded_accel: &Vector3<f64>,
    vehicle: &VehicleParams,
    t: f64,
) -> ForceEstimate {
    ForceEstimate {
        lambda_hat: (measured_accel - commanded_accel) * vehicle.mass,
        t,
    }
}

/// Threshold test on the planar components of the estimate.
pub fn detect_collision(estimate: &ForceEstimate, config: &ControllerConfig) -> bool {
    estimate.lambda_hat.x.abs() >= config.lambda_th || estimate.lambda_hat.y.abs() >= config.lambda_th
}

/// Rising-edge collision detector. After firing it re-arms once the
/// estimate has fallen below half the threshold and `rearm_time` has passed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionDetector {
    armed: bool,
    fired_at: f64,
}

impl Default for CollisionDetector {
    fn default() -> Self {
        Self {
            armed: true,
            fired_at: f64::NEG_INFINITY,
        }
    }
}

impl CollisionDetector {
    pub fn update(&mut self, estimate: &ForceEstimate, config: &ControllerConfig) -> bool {
        if self.armed {
            if detect_collision(estimate, config) {
                self.armed = false;
                self.fired_at = estimate.t;
                return true;
            }
        } else {
            let rearm = 0.5 * config.lambda_th;
            let quiet = estimate.lambda_hat.x.abs() < rearm && estimate.lambda_hat.y.abs() < rearm;
            if quiet && estimate.t - self.fired_at >= config.rearm_time {
                self.armed = true;
            }
        }
        false
    }

    pub fn is_armed(&self) -> bool {
        self.armed
    }
}

/// Post-collision setpoint proportional to the force estimate at impact.
pub fn recovery_setpoint(
    position_at_tc: &Vector3<f64>,
    estimate: &ForceEstimate,
    alpha: [f64; 2],
    z_ref: f64,
) -> Vector3<f64> {
    Vector3::new(
        position_at_tc.x + alpha[0] * estimate.lambda_hat.x,
        position_at_tc.y - alpha[1] * estimate.lambda_hat.y,
        z_ref,
    )
}

/// What the low-level loop is asked to track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Position(Vector3<f64>),
    /// Horizontal inertial velocity with altitude held at `z_ref`.
    Velocity {
        velocity: [f64; 2],
        z_ref: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PositionController {
    integral: Vector3<f64>,
    prev_error: Option<Vector3<f64>>,
    drag: Vector3<f64>,
}

impl PositionController {
    /// Adds `drag ⊙ v_ref` feed-forward so velocity references are held
    /// against known linear drag.
    pub fn with_drag(drag: Vector3<f64>) -> Self {
        Self {
            drag,
            ..Self::default()
        }
    }

    pub fn reset(&mut self) {
        self.integral = Vector3::zeros();
        self.prev_error = None;
    }

    /// Acceleration command including gravity compensation on the vertical
    /// axis. The feedback part is clamped per axis to `accel_limit`; the
    /// compensation terms are not.
    pub fn command(
        &mut self,
        state: &State,
        target: &Target,
        config: &ControllerConfig,
        gravity: f64,
        h: f64,
    ) -> Vector3<f64> {
        let g = &config.gains;
        let clamp_v = |v: f64| v.clamp(-g.vel_limit, g.vel_limit);
        let vel_ref = match *target {
            Target::Position(p) => (p - state.position).map(|e| clamp_v(g.pos_p * e)),
            Target::Velocity { velocity, z_ref } => Vector3::new(
                clamp_v(velocity[0]),
                clamp_v(velocity[1]),
                clamp_v(g.pos_p * (z_ref - state.position.z)),
            ),
        };
        let error = vel_ref - state.velocity;
        self.integral = (self.integral + error * h).map(|v| v.clamp(-g.integral_limit, g.integral_limit));
        let derivative = match self.prev_error {
            Some(prev) if h > 0.0 => (error - prev) / h,
            _ => Vector3::zeros(),
        };
        self.prev_error = Some(error);
        let feedback = error * g.vel_p + self.integral * g.vel_i + derivative * g.vel_d;
        let mut cmd = feedback.map(|a| a.clamp(-config.accel_limit, config.accel_limit));
        cmd += self.drag.component_mul(&vel_ref);
        cmd.z += gravity;
        cmd
    }
}

/// Stateless evaluation of the loop from a fresh integrator.
pub fn position_controller(
    state: &State,
    setpoint: &Vector3<f64>,
    config: &ControllerConfig,
    gravity: f64,
    h: f64,
) -> Vector3<f64> {
    PositionController::default().command(state, &Target::Position(*setpoint), config, gravity, h)
}

/// How the vehicle is brought to a planned collision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    /// Track a constant horizontal inertial velocity until impact.
    Velocity([f64; 2]),
    /// Keep tracking the previous recovery setpoint; the impact results
    /// from the post-collision motion.
    Carry,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub approach: Approach,
    /// Recovery gains used after this collision.
    pub alpha: [f64; 2],
    /// Plane this collision is expected on. When set, detections farther
    /// than [`REGISTRATION_MARGIN`] from it are not counted.
    #[serde(default)]
    pub plane: Option<CollisionFrame>,
}

/// Largest signed gap at which a detection is attributed to a leg's plane, m.
pub const REGISTRATION_MARGIN: f64 = 0.05;

/// Collision-inclusive flight plan driven by detected impacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub z_ref: f64,
    pub legs: Vec<Leg>,
    /// Position held before the first leg and when there are no legs.
    pub hold: Vector3<f64>,
    /// Time spent tracking a recovery setpoint before the next approach.
    pub recovery_time: f64,
    /// Time after the last planned collision before the flight ends.
    pub settle_time: f64,
    /// An approach that has not produced an impact after this long ends
    /// the flight.
    pub approach_timeout: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Hold,
    Approach {
        leg: usize,
        since: f64,
    },
    Recover {
        collision: usize,
        since: f64,
        setpoint: Vector3<f64>,
    },
    Done,
}

/// Mission state machine plus the low-level loop, detector and estimator.
#[derive(Debug, Clone)]
pub struct FlightController {
    pub config: ControllerConfig,
    pub mission: Mission,
    detector: CollisionDetector,
    inner: PositionController,
    phase: Phase,
    collisions: usize,
}

/// Outcome of feeding one force estimate to the flight controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub collision: usize,
    pub setpoint: Vector3<f64>,
}

impl FlightController {
    pub fn new(config: ControllerConfig, mission: Mission) -> Self {
        let phase = match mission.legs.first() {
            Some(Leg {
                approach: Approach::Velocity(_),
                ..
            }) => Phase::Approach { leg: 0, since: 0.0 },
            _ => Phase::Hold,
        };
        Self {
            config,
            mission,
            detector: CollisionDetector::default(),
            inner: PositionController::default(),
            phase,
            collisions: 0,
        }
    }

    pub fn with_drag(mut self, drag: Vector3<f64>) -> Self {
        self.inner = PositionController::with_drag(drag);
        self
    }

    pub fn collisions(&self) -> usize {
        self.collisions
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, Phase::Done)
    }

    /// Position setpoint currently tracked, if any.
    pub fn setpoint(&self) -> Option<Vector3<f64>> {
        match self.phase {
            Phase::Hold => Some(self.mission.hold),
            Phase::Recover { setpoint, .. } => Some(setpoint),
            Phase::Approach { .. } | Phase::Done => None,
        }
    }

    fn target(&self, state: &State) -> Target {
        match self.phase {
            Phase::Hold => Target::Position(self.mission.hold),
            Phase::Recover { setpoint, .. } => Target::Position(setpoint),
            Phase::Approach { leg, .. } => match self.mission.legs[leg].approach {
                Approach::Velocity(v) => Target::Velocity {
                    velocity: v,
                    z_ref: self.mission.z_ref,
                },
                Approach::Carry => Target::Position(state.position),
            },
            Phase::Done => Target::Position(state.position),
        }
    }

    /// Advances the mission clock and returns the acceleration command.
    pub fn command(&mut self, t: f64, state: &State, gravity: f64, h: f64) -> Vector3<f64> {
        let m = &self.mission;
        match self.phase {
            Phase::Hold => {
                let limit = if m.legs.is_empty() {
                    m.settle_time
                } else {
                    m.approach_timeout
                };
                if t >= limit {
                    self.phase = Phase::Done;
                }
            }
            Phase::Approach { since, .. } if t - since >= m.approach_timeout => self.phase = Phase::Done,
            Phase::Recover { collision, since, .. } => {
                let elapsed = t - since;
                let next = collision + 1;
                if next >= m.legs.len() {
                    if self.collisions >= m.legs.len() && elapsed >= m.settle_time {
                        self.phase = Phase::Done;
                    }
                } else if let Approach::Velocity(_) = m.legs[next].approach {
                    if elapsed >= m.recovery_time {
                        self.phase = Phase::Approach { leg: next, since: t };
                        self.inner.reset();
                    }
                } else if elapsed >= m.recovery_time + m.approach_timeout {
                    self.phase = Phase::Done;
                }
            }
            _ => {}
        }
        let target = self.target(state);
        self.inner.command(state, &target, &self.config, gravity, h)
    }

    /// Feeds the latest force estimate; on a detected collision switches to
    /// recovery and returns the new setpoint.
    pub fn observe(&mut self, estimate: &ForceEstimate, position: &Vector3<f64>) -> Option<Detection> {
        if !self.detector.update(estimate, &self.config) {
            return None;
        }
        let collision = self.collisions;
        let expected = self.mission.legs.get(collision).and_then(|leg| leg.plane);
        if expected.is_some_and(|plane| plane.gap(position) > REGISTRATION_MARGIN) {
            return None;
        }
        self.collisions += 1;
        let alpha = self
            .mission
            .legs
            .get(collision)
            .or(self.mission.legs.last())
            .map_or(self.config.alpha, |leg| leg.alpha);
        let setpoint = recovery_setpoint(position, estimate, alpha, self.mission.z_ref);
        if !self.is_done() {
            self.phase = Phase::Recover {
                collision,
                since: estimate.t,
                setpoint,
            };
            self.inner.reset();
        }
        Some(Detection { collision, setpoint })
    }
}

//! Unilateral spring-damper contact solved as a per-step complementarity
//! problem under implicit Euler.
//!
//! Within one step of length `h` the normal velocity and gap respond
//! linearly to the normal force `λ`:
//!
//! ```text
//! v⁺ = v_free + c·λ          c = (h/m) / (1 + h·b)
//! x⁺ = x_free + h·c·λ
//! w  = λ + k·x⁺ + f·v⁺  =  (1 + (k·h + f)·c)·λ + (k·x_free + f·v_free)
//! ```
//!
//! so the force is the solution of a scalar LCP with `M = 1 + (k·h + f)·c`
//! and `q = k·x_free + f·v_free`. Friction follows from the normal force.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::step_free;
use crate::error::{Error, Result};
use crate::frame::{CfState, CollisionFrame, State};
use crate::lcp::{solve_scalar, LcpProblem, ScalarSolution};
use crate::params::{ContactParams, VehicleParams};

/// Contact force in the collision frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContactForce {
    /// Normal force, N.
    pub lambda_x: f64,
    /// Lateral friction, N.
    pub lambda_y: f64,
    /// Vertical friction, N.
    pub lambda_z: f64,
    pub active: bool,
}

impl ContactForce {
    pub const NONE: ContactForce = ContactForce {
        lambda_x: 0.0,
        lambda_y: 0.0,
        lambda_z: 0.0,
        active: false,
    };

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.lambda_x, self.lambda_y, self.lambda_z)
    }

    pub fn inertial(&self, frame: &CollisionFrame) -> Vector3<f64> {
        frame.vector_to_inertial(&self.as_vector())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    /// Time step, s.
    pub h: f64,
    /// Complementarity residual tolerance, N.
    pub contact_tol: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            h: 1e-4,
            contact_tol: 1e-10,
        }
    }
}

impl StepConfig {
    pub fn with_h(h: f64) -> Self {
        Self { h, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(crate::error::invalid("h", "must be finite and > 0"));
        }
        if self.contact_tol.is_nan() || self.contact_tol <= 0.0 {
            return Err(crate::error::invalid("contact_tol", "must be > 0"));
        }
        Ok(())
    }
}

/// Scalar normal-force problem for one implicit step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactLcp {
    pub m_eff: f64,
    pub q_free: f64,
    /// Normal velocity change per newton of normal force.
    pub gain: f64,
    pub gap_free: f64,
    pub speed_free: f64,
}

impl ContactLcp {
    pub fn problem(&self) -> LcpProblem {
        LcpProblem::scalar(self.m_eff, self.q_free)
    }
}

/// Assembles the normal-force LCP in collision-frame coordinates.
///
/// `drag_normal` is the linear drag along the plane normal and
/// `free_accel_x` every non-contact acceleration along it.
pub fn assemble_contact_lcp(
    cf: &CfState,
    params: &ContactParams,
    mass: f64,
    drag_normal: f64,
    free_accel_x: f64,
    h: f64,
) -> Result<ContactLcp> {
    let inputs = [cf.gap(), cf.normal_speed(), free_accel_x, h, mass, drag_normal];
    if inputs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("contact LCP inputs"));
    }
    let damp = 1.0 + h * drag_normal;
    let gain = (h / mass) / damp;
    let speed_free = (cf.normal_speed() + h * free_accel_x) / damp;
    let gap_free = cf.gap() + h * speed_free;
    Ok(ContactLcp {
        m_eff: 1.0 + (params.k * h + params.f) * gain,
        q_free: params.k * gap_free + params.f * speed_free,
        gain,
        gap_free,
        speed_free,
    })
}

pub fn solve_lcp_contact(lcp: &ContactLcp) -> Result<ScalarSolution> {
    Ok(solve_scalar(lcp.m_eff, lcp.q_free)?)
}

/// Friction forces `(λ_y, λ_z)` induced by a normal force.
pub fn friction_forces(lambda_x: f64, lateral_speed: f64, params: &ContactParams) -> (f64, f64) {
    if lambda_x <= 0.0 {
        return (0.0, 0.0);
    }
    let lambda_y = -params.mu * lambda_x * lateral_speed;
    let lambda_z = -params.nu * lambda_x / (1.0 + lambda_x);
    (lambda_y, lambda_z)
}

/// Result of one contact-aware integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactStep {
    pub state: State,
    pub force: ContactForce,
    /// Present when the complementarity problem was engaged.
    pub lcp: Option<(ContactLcp, ScalarSolution)>,
}

/// Advances one step against a single contact plane.
///
/// The complementarity problem is only engaged when the gap at step entry
/// is non-positive; otherwise this is a free-flight step. `input_accel`
/// holds every non-contact acceleration (gravity included) in the inertial
/// frame.
pub fn step_contact(
    state: &State,
    frame: &CollisionFrame,
    params: &ContactParams,
    vehicle: &VehicleParams,
    input_accel: &Vector3<f64>,
    cfg: &StepConfig,
) -> Result<ContactStep> {
    if !state.is_finite() || input_accel.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("contact step inputs"));
    }
    let cf = frame.to_frame(state);
    if cf.gap() > 0.0 {
        return Ok(ContactStep {
            state: step_free(state, input_accel, vehicle, cfg.h)?,
            force: ContactForce::NONE,
            lcp: None,
        });
    }

    let h = cfg.h;
    let inv_damp = vehicle.drag_vector().map(|b| 1.0 / (1.0 + h * b));
    let v_free = (state.velocity + input_accel * h).component_mul(&inv_damp);
    let x_axis = frame.rotation.column(0).into_owned();
    let y_axis = frame.rotation.column(1).into_owned();
    let z_axis = frame.rotation.column(2).into_owned();
    let dv_normal = x_axis.component_mul(&inv_damp) * (h / vehicle.mass);
    let dv_lateral = y_axis.component_mul(&inv_damp) * (h / vehicle.mass);
    let dv_vertical = z_axis.component_mul(&inv_damp) * (h / vehicle.mass);

    let gain = x_axis.dot(&dv_normal);
    let speed_free = x_axis.dot(&v_free);
    let gap_free = cf.gap() + h * speed_free;
    let lcp = ContactLcp {
        m_eff: 1.0 + (params.k * h + params.f) * gain,
        q_free: params.k * gap_free + params.f * speed_free,
        gain,
        gap_free,
        speed_free,
    };
    let sol = solve_lcp_contact(&lcp)?;
    let lambda_x = sol.lambda;

    let v_normal = v_free + dv_normal * lambda_x;
    // Lateral friction is evaluated at the end-of-step lateral speed, which
    // is linear in itself and solved in closed form.
    let lateral_gain = y_axis.dot(&dv_lateral);
    let lateral_speed = y_axis.dot(&v_normal) / (1.0 + params.mu * lambda_x * lateral_gain);
    let (lambda_y, lambda_z) = friction_forces(lambda_x, lateral_speed, params);
    let velocity = v_normal + dv_lateral * lambda_y + dv_vertical * lambda_z;
    let position = state.position + velocity * h;

    let force = ContactForce {
        lambda_x,
        lambda_y,
        lambda_z,
        active: lambda_x > 0.0,
    };
    Ok(ContactStep {
        state: State { position, velocity },
        force,
        lcp: Some((lcp, sol)),
    })
}

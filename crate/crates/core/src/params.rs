//! Stiffness modes, contact coefficient presets, vehicle constants and the
//! cam-disc lock kinematics.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Stiffness configuration of the airframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Arms locked.
    Rigid = 1,
    /// Arms free on their bearings.
    Flexible = 2,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Rigid, Mode::Flexible];

    pub fn index(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Rigid => f.write_str("rigid"),
            Mode::Flexible => f.write_str("flexible"),
        }
    }
}

/// Surfaces with identified coefficient sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    Concrete,
    Acrylic,
    /// No dedicated identification exists; uses the concrete coefficients.
    Wood,
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Surface::Concrete => f.write_str("concrete"),
            Surface::Acrylic => f.write_str("acrylic"),
            Surface::Wood => f.write_str("wood"),
        }
    }
}

/// Unilateral spring-damper contact coefficients with friction constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactParams {
    /// Spring coefficient, N/m.
    pub k: f64,
    /// Damping coefficient, N·s/m.
    pub f: f64,
    /// Lateral friction constant.
    pub mu: f64,
    /// Vertical friction constant.
    pub nu: f64,
    pub mode: Mode,
    pub surface: String,
}

impl ContactParams {
    pub fn new(k: f64, f: f64, mu: f64, nu: f64, mode: Mode, surface: impl Into<String>) -> Self {
        Self {
            k,
            f,
            mu,
            nu,
            mode,
            surface: surface.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("k", self.k)?;
        check_finite("f", self.f)?;
        check_finite("mu", self.mu)?;
        check_finite("nu", self.nu)?;
        if self.k <= 0.0 {
            return Err(invalid("k", format!("must be > 0, got {}", self.k)));
        }
        for (name, v) in [("f", self.f), ("mu", self.mu), ("nu", self.nu)] {
            if v < 0.0 {
                return Err(invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn check_finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "must be finite"))
    }
}

/// Identified coefficient set for a mode against a surface.
pub fn mode_params(mode: Mode, surface: Surface) -> ContactParams {
    let (k, f, mu, nu) = match (surface, mode) {
        (Surface::Concrete | Surface::Wood, Mode::Rigid) => (5500.0, 15.0, 0.3, 0.5),
        (Surface::Concrete | Surface::Wood, Mode::Flexible) => (750.0, 8.5, 5.0, 0.7),
        (Surface::Acrylic, Mode::Rigid) => (4200.0, 15.0, 0.3, 5.0),
        (Surface::Acrylic, Mode::Flexible) => (1250.0, 8.5, 5.0, 10.0),
    };
    ContactParams::new(k, f, mu, nu, mode, surface.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// Linear drag per inertial axis, 1/s.
    pub drag: [f64; 3],
    /// m/s²
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

fn default_gravity() -> f64 {
    9.81
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 1.3,
            drag: [0.0; 3],
            gravity: default_gravity(),
        }
    }
}

impl VehicleParams {
    /// Free-flight drag used for planning at constant height.
    pub fn in_flight() -> Self {
        Self {
            drag: [0.2, 0.4, 0.0],
            ..Self::default()
        }
    }

    pub fn drag_vector(&self) -> Vector3<f64> {
        Vector3::from(self.drag)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid("vehicle.mass", "must be finite and > 0"));
        }
        if self.drag.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(invalid("vehicle.drag", "components must be finite and >= 0"));
        }
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(invalid("vehicle.gravity", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Cam disc driving the arm-lock rods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CamGeometry {
    pub cam_radius: f64,
    /// Radius of the circle traced by the rod pin.
    pub pin_radius: f64,
    /// Lower rotation limit, rad.
    pub theta_0: f64,
}

impl CamGeometry {
    pub fn new(cam_radius: f64, pin_radius: f64) -> Result<Self> {
        let g = Self {
            cam_radius,
            pin_radius,
            theta_0: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pin_radius > 0.0 && self.cam_radius > self.pin_radius) {
            return Err(invalid("cam", "requires cam_radius > pin_radius > 0"));
        }
        Ok(())
    }
}

/// Rod translation for a cam rotation `theta`; valid over a quarter turn
/// starting at `theta_0`.
pub fn cam_rod_extension(theta: f64, geom: &CamGeometry) -> Result<f64> {
    geom.validate()?;
    let (lo, hi) = (geom.theta_0, geom.theta_0 + FRAC_PI_2);
    if !(theta >= lo && theta <= hi) {
        return Err(Error::CamOutOfRange { theta, lo, hi });
    }
    Ok(geom.cam_radius - geom.pin_radius * theta.cos())
}

//! Collision modeling and collision-inclusive planning for quadrotors with a
//! switchable rigid/flexible airframe.
//!
//! Impacts are modeled as a unilateral spring-damper between a point-mass
//! vehicle and a contact plane. Each implicit-Euler step solves a linear
//! complementarity problem for the normal force; friction follows from it.
//! On top of the contact model sit a force-threshold collision detector with
//! force-proportional recovery setpoints, an exhaustive planner over
//! pre-collision velocities and stiffness modes, and a fitter that
//! identifies contact coefficients from drop-test traces.
//!
//! ```
//! use quadcollide::{drop_test_scenario, simulate, Mode, Surface, StepConfig};
//!
//! let scenario = drop_test_scenario(0.05, Mode::Rigid, Surface::Concrete).unwrap();
//! let trajectory = simulate(&scenario, &StepConfig::default()).unwrap();
//! assert!(!trajectory.events.is_empty());
//! ```

pub mod cli;
pub mod contact;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod frame;
pub mod identification;
pub mod io;
pub mod lcp;
pub mod params;
pub mod planner;

pub use contact::{assemble_contact_lcp, friction_forces, step_contact, ContactForce, StepConfig};
pub use dynamics::{drop_test_scenario, simulate, step_free, Scenario, Trajectory};
pub use error::{Error, LcpError, Result};
pub use frame::{make_collision_frame, CollisionFrame, State};
pub use params::{cam_rod_extension, mode_params, CamGeometry, ContactParams, Mode, Surface, VehicleParams};

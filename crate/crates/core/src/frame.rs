//! Point-mass state and the collision reference frame.
//!
//! The collision frame has its first axis along the outward normal of the
//! contact plane, the third axis as close as possible to a caller-supplied
//! "up" direction and the second completing a right-handed triad. The first
//! collision-frame coordinate is reported as a signed gap: zero at the
//! instant the propeller guard first touches the plane, negative while the
//! guard is compressed.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Translational state of the vehicle in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl State {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>) -> Self {
        Self { position, velocity }
    }

    pub fn at_rest(position: Vector3<f64>) -> Self {
        Self::new(position, Vector3::zeros())
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|v| v.is_finite())
    }
}

/// State expressed in a collision frame: `position.x` is the signed gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl CfState {
    pub fn gap(&self) -> f64 {
        self.position.x
    }

    pub fn normal_speed(&self) -> f64 {
        self.velocity.x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionFrame {
    pub origin: Vector3<f64>,
    /// Columns are the collision axes expressed in the inertial frame.
    pub rotation: Matrix3<f64>,
    /// Distance from the center of mass to the plane at first guard contact.
    pub rest_offset: f64,
}

const DEGENERATE_TOL: f64 = 1e-9;

impl CollisionFrame {
    pub fn new(
        plane_point: Vector3<f64>,
        outward_normal: Vector3<f64>,
        up_hint: Vector3<f64>,
        rest_offset: f64,
    ) -> Result<Self> {
        if !(rest_offset > 0.0 && rest_offset.is_finite()) {
            return Err(invalid("rest_offset", "must be finite and > 0"));
        }
        let all_finite = plane_point
            .iter()
            .chain(outward_normal.iter())
            .chain(up_hint.iter())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::NonFinite("collision frame inputs"));
        }
        let n_norm = outward_normal.norm();
        if n_norm < DEGENERATE_TOL {
            return Err(Error::DegenerateFrame("outward normal is zero".into()));
        }
        let x_axis = outward_normal / n_norm;
        let z_raw = up_hint - x_axis * up_hint.dot(&x_axis);
        let z_norm = z_raw.norm();
        if z_norm < DEGENERATE_TOL * up_hint.norm().max(1.0) {
            return Err(Error::DegenerateFrame(
                "outward normal is parallel to the up hint".into(),
            ));
        }
        let z_axis = z_raw / z_norm;
        let y_axis = z_axis.cross(&x_axis);
        Ok(Self {
            origin: plane_point,
            rotation: Matrix3::from_columns(&[x_axis, y_axis, z_axis]),
            rest_offset,
        })
    }

    /// Outward unit normal of the plane (first collision axis).
    pub fn normal(&self) -> Vector3<f64> {
        self.rotation.column(0).into_owned()
    }

    pub fn to_frame(&self, state: &State) -> CfState {
        let rt = self.rotation.transpose();
        let mut position = rt * (state.position - self.origin);
        position.x -= self.rest_offset;
        CfState {
            position,
            velocity: rt * state.velocity,
        }
    }

    pub fn from_frame(&self, cf: &CfState) -> State {
        let mut local = cf.position;
        local.x += self.rest_offset;
        State {
            position: self.rotation * local + self.origin,
            velocity: self.rotation * cf.velocity,
        }
    }

    /// Signed gap of an inertial position to this frame's contact surface.
    pub fn gap(&self, position: &Vector3<f64>) -> f64 {
        self.normal().dot(&(position - self.origin)) - self.rest_offset
    }

    /// Rotates a collision-frame vector into the inertial frame.
    pub fn vector_to_inertial(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn vector_to_frame(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * v
    }
}

/// Builds a collision frame from a point on the plane, its outward normal
/// and an up hint used to fix the tangential axes.
pub fn make_collision_frame(
    plane_point: Vector3<f64>,
    outward_normal: Vector3<f64>,
    up_hint: Vector3<f64>,
    rest_offset: f64,
) -> Result<CollisionFrame> {
    CollisionFrame::new(plane_point, outward_normal, up_hint, rest_offset)
}

pub fn to_collision_frame(state: &State, frame: &CollisionFrame) -> CfState {
    frame.to_frame(state)
}

pub fn from_collision_frame(cf: &CfState, frame: &CollisionFrame) -> State {
    frame.from_frame(cf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ground() -> CollisionFrame {
        make_collision_frame(Vector3::zeros(), Vector3::z(), Vector3::x(), 0.2).unwrap()
    }

    #[test]
    fn ground_frame_normal_is_vertical() {
        let f = ground();
        assert_eq!(f.normal(), Vector3::z());
    }

    #[test]
    fn wall_frame_axes() {
        let f = make_collision_frame(
            Vector3::new(1.65, 0.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::z(),
            0.2,
        )
        .unwrap();
        assert_abs_diff_eq!(f.rotation.column(0).into_owned(), -Vector3::x(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.rotation.column(2).into_owned(), Vector3::z(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.rotation.column(1).into_owned(), -Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn parallel_hint_is_rejected() {
        let err = make_collision_frame(Vector3::zeros(), Vector3::z(), Vector3::z(), 0.2);
        assert!(matches!(err, Err(Error::DegenerateFrame(_))));
        let err = make_collision_frame(Vector3::zeros(), Vector3::zeros(), Vector3::z(), 0.2);
        assert!(matches!(err, Err(Error::DegenerateFrame(_))));
    }

    #[test]
    fn non_positive_rest_offset_is_rejected() {
        assert!(make_collision_frame(Vector3::zeros(), Vector3::z(), Vector3::x(), 0.0).is_err());
    }

    #[test]
    fn drop_heights_map_to_gap() {
        let f = ground();
        let s = State::at_rest(Vector3::new(0.0, 0.0, 0.25));
        assert_abs_diff_eq!(f.to_frame(&s).gap(), 0.05, epsilon = 1e-15);
        let s = State::at_rest(Vector3::new(0.0, 0.0, 0.2));
        assert_eq!(f.to_frame(&s).gap(), 0.0);
    }

    #[test]
    fn origin_state_is_deterministic() {
        let f = ground();
        let cf = f.to_frame(&State::at_rest(Vector3::zeros()));
        assert_eq!(cf.gap(), -0.2);
        assert_eq!(cf.velocity, Vector3::zeros());
        assert_eq!(f.to_frame(&State::at_rest(Vector3::zeros())), cf);
    }

    #[test]
    fn zero_gap_lies_on_offset_surface() {
        let f = make_collision_frame(Vector3::zeros(), Vector3::x(), Vector3::z(), 0.3).unwrap();
        let cf = CfState {
            position: Vector3::new(0.0, 0.0, 0.0),
            velocity: Vector3::zeros(),
        };
        let s = f.from_frame(&cf);
        assert_abs_diff_eq!(s.position, Vector3::new(0.3, 0.0, 0.0), epsilon = 1e-15);
        assert_eq!(f.gap(&s.position), 0.0);
    }

    fn unit_vec() -> impl Strategy<Value = Vector3<f64>> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("nonzero", |(a, b, c)| a * a + b * b + c * c > 0.01)
            .prop_map(|(a, b, c)| Vector3::new(a, b, c).normalize())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn rotation_is_orthonormal(n in unit_vec(), up in unit_vec(), off in 0.01..1.0f64) {
            prop_assume!(n.cross(&up).norm() > 1e-3);
            let f = make_collision_frame(Vector3::zeros(), n, up, off).unwrap();
            let err = (f.rotation.transpose() * f.rotation - Matrix3::identity()).abs().max();
            prop_assert!(err < 1e-12);
            prop_assert!((f.rotation.determinant() - 1.0).abs() < 1e-12);
            prop_assert!((f.normal() - n).norm() < 1e-12);
        }

        #[test]
        fn frame_round_trip(
            n in unit_vec(), up in unit_vec(), off in 0.01..1.0f64,
            o in prop::array::uniform3(-5.0..5.0f64),
            p in prop::array::uniform3(-5.0..5.0f64),
            v in prop::array::uniform3(-5.0..5.0f64),
        ) {
            prop_assume!(n.cross(&up).norm() > 1e-3);
            let f = make_collision_frame(Vector3::from(o), n, up, off).unwrap();
            let s = State::new(Vector3::from(p), Vector3::from(v));
            let back = f.from_frame(&f.to_frame(&s));
            for i in 0..3 {
                prop_assert!((back.position[i] - s.position[i]).abs() < 1e-12);
                prop_assert!((back.velocity[i] - s.velocity[i]).abs() < 1e-12);
            }
        }
    }
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, Vector3};
use quadcollide::controller::ControllerConfig;
use quadcollide::dynamics::{ContactModel, Obstacle};
use quadcollide::frame::make_collision_frame;
use quadcollide::identification::ObservedTrajectory;
use quadcollide::planner::{LegPolicy, PlanLeg, PlanQuery, PlanTiming, VelocityGrid};
use quadcollide::{
    drop_test_scenario, simulate, step_contact, CollisionFrame, ContactParams, Mode, Scenario, State, StepConfig,
    Surface, Trajectory, VehicleParams,
};

pub fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn scenario_path(name: &str) -> PathBuf {
    scenario_dir().join(format!("{name}.json"))
}

pub fn bundled_scenarios() -> Vec<PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            p.extension().is_some_and(|e| e == "json") && !name.starts_with("bounds_")
        })
        .collect();
    v.sort();
    v
}

pub fn ground() -> CollisionFrame {
    make_collision_frame(Vector3::zeros(), Vector3::z(), Vector3::x(), 0.2).unwrap()
}

pub fn drop_with(height: f64, params: &ContactParams) -> Scenario {
    drop_test_scenario(height, params.mode, Surface::Concrete)
        .unwrap()
        .with_contact_params(params)
}

pub fn drop_trajectory(height: f64, mode: Mode, h: f64) -> (Scenario, Trajectory) {
    let sc = drop_test_scenario(height, mode, Surface::Concrete).unwrap();
    let traj = simulate(&sc, &StepConfig::with_h(h)).unwrap();
    (sc, traj)
}

pub fn observe_drop(height: f64, mode: Mode) -> (Scenario, ObservedTrajectory) {
    let (sc, traj) = drop_trajectory(height, mode, 1e-4);
    let obs = ObservedTrajectory::from_trajectory(&traj, 0, 10, format!("drop {height} m")).without_lateral();
    (sc, obs)
}

/// Isolated bounce against the ground frame with only the contact force
/// acting: enters at zero gap with normal speed `-v0` and returns the
/// outgoing normal speed once the gap is positive again, plus the applied
/// normal forces.
pub fn bounce(params: &ContactParams, v0: f64, h: f64) -> (f64, Vec<f64>) {
    let frame = ground();
    let vehicle = VehicleParams::default();
    let cfg = StepConfig::with_h(h);
    let mut state = State::new(Vector3::new(0.0, 0.0, 0.2), Vector3::new(0.0, 0.0, -v0));
    let mut forces = Vec::new();
    for _ in 0..1_000_000 {
        let step = step_contact(&state, &frame, params, &vehicle, &Vector3::zeros(), &cfg).unwrap();
        state = step.state;
        forces.push(step.force.lambda_x);
        if frame.gap(&state.position) > 0.0 {
            return (state.velocity.z, forces);
        }
    }
    panic!("bounce did not end");
}

/// Exhaustive active-set solve of a small LCP; returns the first `z` that
/// satisfies every condition.
pub fn brute_force_lcp(m: &DMatrix<f64>, q: &DVector<f64>) -> Option<DVector<f64>> {
    let n = q.len();
    for mask in 0u32..(1 << n) {
        let active: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mut z = DVector::zeros(n);
        if !active.is_empty() {
            let k = active.len();
            let sub = DMatrix::from_fn(k, k, |r, c| m[(active[r], active[c])]);
            let rhs = DVector::from_fn(k, |r, _| -q[active[r]]);
            let Some(sol) = sub.lu().solve(&rhs) else { continue };
            for (r, &i) in active.iter().enumerate() {
                z[i] = sol[r];
            }
        }
        let w = m * &z + q;
        if z.iter().all(|&v| v >= -1e-12) && w.iter().all(|&v| v >= -1e-10) {
            return Some(z);
        }
    }
    None
}

pub fn wall(point: [f64; 3], normal: [f64; 3], surface: Surface, name: &str) -> Obstacle {
    Obstacle {
        name: name.into(),
        frame: make_collision_frame(Vector3::from(point), Vector3::from(normal), Vector3::z(), 0.2).unwrap(),
        contact: ContactModel::Preset(surface),
    }
}

/// One-wall query with a coarse grid, cheap enough for property tests.
pub fn single_wall_query(wall_x: f64, goal: [f64; 2], resolution: f64) -> PlanQuery {
    PlanQuery {
        start: [0.0, 0.0],
        goal,
        z_ref: 1.0,
        obstacles: vec![wall([wall_x, 0.0, 1.0], [-1.0, 0.0, 0.0], Surface::Acrylic, "wall")],
        n_collisions: 1,
        legs: vec![PlanLeg {
            obstacle: 0,
            policy: LegPolicy::Grid,
            alpha: [0.12, 0.025],
        }],
        velocity_grid: VelocityGrid { resolution, bound: 1.0 },
        modes_allowed: vec![Mode::Rigid, Mode::Flexible],
        timing: PlanTiming {
            recovery_time: 1.5,
            settle_time: 2.0,
            approach_timeout: 3.0,
        },
        vehicle: VehicleParams::in_flight(),
        controller: ControllerConfig::default(),
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

//! Exhaustive-enumeration planning of impact velocities and stiffness-mode
//! sequences by forward simulation of the collision model and the recovery
//! controller.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contact::StepConfig;
use crate::controller::{Approach, ControllerConfig, Leg, Mission};
use crate::dynamics::{
    simulate, simulate_endpoints, ControllerSetup, EventKind, Obstacle, Scenario, ScenarioKind, Trajectory,
};
use crate::error::{invalid, Error, Result};
use crate::frame::State;
use crate::params::{Mode, VehicleParams};

/// Symmetric grid of impact-velocity components in the collision frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityGrid {
    /// m/s
    pub resolution: f64,
    /// m/s
    pub bound: f64,
}

impl Default for VelocityGrid {
    fn default() -> Self {
        Self {
            resolution: 0.1,
            bound: 1.5,
        }
    }
}

impl VelocityGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(invalid("velocity_grid.resolution", "must be finite and > 0"));
        }
        if !(self.bound > 0.0 && self.bound.is_finite()) {
            return Err(invalid("velocity_grid.bound", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Multiples of the resolution within `±bound`, ascending. Values are
    /// snapped so that a grid at half the resolution contains this one.
    pub fn points(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = (self.bound / self.resolution + 1e-9).floor() as i64;
        Ok((-n..=n)
            .map(|i| snap(i as f64 * self.resolution))
            .filter(|v| v.abs() <= self.bound + 1e-12)
            .collect())
    }
}

fn snap(v: f64) -> f64 {
    let s = (v * 1e9).round() / 1e9;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

/// How the vehicle reaches a planned collision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegPolicy {
    /// The impact velocity is a decision variable taken from the grid.
    Grid,
    /// The impact follows from the preceding recovery motion.
    Carry,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanLeg {
    /// Index into the query's obstacles.
    pub obstacle: usize,
    pub policy: LegPolicy,
    /// Recovery gains `(α_x, α_y)` after this collision, m/N.
    pub alpha: [f64; 2],
}

/// Phase durations of the simulated mission, s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanTiming {
    pub recovery_time: f64,
    pub settle_time: f64,
    pub approach_timeout: f64,
}

impl Default for PlanTiming {
    fn default() -> Self {
        Self {
            recovery_time: 2.0,
            settle_time: 4.0,
            approach_timeout: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanQuery {
    /// Planar start position, m.
    pub start: [f64; 2],
    /// Planar goal position, m.
    pub goal: [f64; 2],
    pub z_ref: f64,
    pub obstacles: Vec<Obstacle>,
    pub n_collisions: usize,
    /// One entry per collision. Empty means collision `i` targets obstacle
    /// `i` with a grid-chosen velocity and the controller's default gains.
    pub legs: Vec<PlanLeg>,
    pub velocity_grid: VelocityGrid,
    pub modes_allowed: Vec<Mode>,
    pub timing: PlanTiming,
    pub vehicle: VehicleParams,
    pub controller: ControllerConfig,
}

impl PlanQuery {
    pub fn validate(&self) -> Result<()> {
        self.velocity_grid.validate()?;
        self.vehicle.validate()?;
        self.controller.validate()?;
        let finite = self.start.iter().chain(&self.goal).all(|v| v.is_finite()) && self.z_ref.is_finite();
        if !finite {
            return Err(Error::NonFinite("start, goal or z_ref"));
        }
        if self.modes_allowed.is_empty() {
            return Err(invalid("modes_allowed", "must not be empty"));
        }
        if self.n_collisions > 0 && self.obstacles.is_empty() {
            return Err(invalid("obstacles", "planned collisions need at least one obstacle"));
        }
        if !self.legs.is_empty() && self.legs.len() != self.n_collisions {
            return Err(invalid(
                "legs",
                format!("expected {} entries, got {}", self.n_collisions, self.legs.len()),
            ));
        }
        for (i, leg) in self.legs().iter().enumerate() {
            if leg.obstacle >= self.obstacles.len() {
                return Err(invalid(format!("legs[{i}].obstacle"), "out of range"));
            }
            if leg.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                return Err(invalid(format!("legs[{i}].alpha"), "must be finite and >= 0"));
            }
            if i == 0 && leg.policy == LegPolicy::Carry {
                return Err(invalid("legs[0].policy", "the first collision needs a grid approach"));
            }
        }
        let t = &self.timing;
        if [t.recovery_time, t.settle_time, t.approach_timeout]
            .iter()
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(invalid("timing", "durations must be finite and > 0"));
        }
        Ok(())
    }

    /// Legs with defaults filled in.
    pub fn legs(&self) -> Vec<PlanLeg> {
        if !self.legs.is_empty() {
            return self.legs.clone();
        }
        (0..self.n_collisions)
            .map(|i| PlanLeg {
                obstacle: i.min(self.obstacles.len().saturating_sub(1)),
                policy: LegPolicy::Grid,
                alpha: self.controller.alpha,
            })
            .collect()
    }

    fn modes(&self) -> Vec<Mode> {
        let mut m = self.modes_allowed.clone();
        m.sort();
        m.dedup();
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Impact velocity `(ẋ†, ẏ†)` per collision in the target obstacle's
    /// frame; `None` for carried approaches.
    pub approach_velocity: Vec<Option<[f64; 2]>>,
    /// Stiffness mode during each collision.
    pub mode_sequence: Vec<Mode>,
}

impl Candidate {
    /// Sum of the commanded impact speeds.
    pub fn total_impact_speed(&self) -> f64 {
        self.approach_velocity.iter().flatten().map(|v| v[0].hypot(v[1])).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredCandidate {
    pub candidate: Candidate,
    /// Planar terminal distance to the goal; infinite when infeasible.
    pub terminal_distance: f64,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub best: Candidate,
    pub terminal_distance: f64,
    pub trajectory: Trajectory,
    /// Every candidate in enumeration order.
    pub all_scores: Vec<ScoredCandidate>,
}

/// Cartesian product of grid velocities for every grid leg and allowed
/// modes for every collision, in lexicographic order: collision 0's
/// `(ẋ†, ẏ†)` varies slowest, the mode sequence fastest.
pub fn enumerate_candidates(query: &PlanQuery) -> Result<Vec<Candidate>> {
    query.validate()?;
    let points = query.velocity_grid.points()?;
    if points.is_empty() {
        return Err(invalid("velocity_grid", "contains no points"));
    }
    let legs = query.legs();
    let modes = query.modes();
    let n = legs.len();
    if n == 0 {
        return Ok(vec![Candidate {
            approach_velocity: Vec::new(),
            mode_sequence: Vec::new(),
        }]);
    }

    // Mixed-radix digits, most significant first.
    let mut radices = Vec::new();
    for leg in &legs {
        if leg.policy == LegPolicy::Grid {
            radices.push(points.len());
            radices.push(points.len());
        }
    }
    radices.extend(std::iter::repeat_n(modes.len(), n));
    let total: usize = radices.iter().product();

    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; radices.len()];
    for _ in 0..total {
        let mut d = digits.iter();
        let approach_velocity = legs
            .iter()
            .map(|leg| match leg.policy {
                LegPolicy::Grid => Some([points[*d.next().unwrap()], points[*d.next().unwrap()]]),
                LegPolicy::Carry => None,
            })
            .collect();
        let mode_sequence = d.map(|&i| modes[i]).collect();
        out.push(Candidate {
            approach_velocity,
            mode_sequence,
        });
        for k in (0..digits.len()).rev() {
            digits[k] += 1;
            if digits[k] < radices[k] {
                break;
            }
            digits[k] = 0;
        }
    }
    Ok(out)
}

/// Scenario that flies `candidate` for `query`.
pub fn candidate_scenario(candidate: &Candidate, query: &PlanQuery) -> Result<Scenario> {
    let legs = query.legs();
    if candidate.approach_velocity.len() != legs.len() || candidate.mode_sequence.len() != legs.len() {
        return Err(invalid("candidate", "length does not match the planned collisions"));
    }
    let mut mission_legs = Vec::with_capacity(legs.len());
    for (i, (leg, v)) in legs.iter().zip(&candidate.approach_velocity).enumerate() {
        let approach = match (leg.policy, v) {
            (LegPolicy::Grid, Some([vx, vy])) => {
                if vx.abs() > query.velocity_grid.bound + 1e-9 || vy.abs() > query.velocity_grid.bound + 1e-9 {
                    return Err(invalid(
                        format!("candidate.approach_velocity[{i}]"),
                        "outside the velocity bound",
                    ));
                }
                let frame = &query.obstacles[leg.obstacle].frame;
                let v = frame.vector_to_inertial(&Vector3::new(*vx, *vy, 0.0));
                Approach::Velocity([v.x, v.y])
            }
            (LegPolicy::Carry, None) => Approach::Carry,
            _ => {
                return Err(invalid(
                    format!("candidate.approach_velocity[{i}]"),
                    "does not match the leg policy",
                ))
            }
        };
        mission_legs.push(Leg {
            approach,
            alpha: leg.alpha,
            plane: Some(query.obstacles[leg.obstacle].frame),
        });
    }
    let t = query.timing;
    let n = legs.len() as f64;
    let mission = Mission {
        z_ref: query.z_ref,
        legs: mission_legs,
        hold: Vector3::new(query.goal[0], query.goal[1], query.z_ref),
        recovery_time: t.recovery_time,
        settle_time: t.settle_time,
        approach_timeout: t.approach_timeout,
    };
    let mode_schedule = if candidate.mode_sequence.is_empty() {
        vec![query.modes()[0]]
    } else {
        candidate.mode_sequence.clone()
    };
    Ok(Scenario {
        kind: ScenarioKind::Plan,
        initial_state: State::at_rest(Vector3::new(query.start[0], query.start[1], query.z_ref)),
        obstacles: query.obstacles.clone(),
        mode_schedule,
        duration: (n + 1.0) * (t.approach_timeout + t.recovery_time) + t.settle_time,
        vehicle: query.vehicle.clone(),
        controller: Some(ControllerSetup {
            config: query.controller.clone(),
            mission,
        }),
        gravity_axis: -Vector3::z(),
    })
}

/// Forward-simulates a candidate and measures the planar distance from the
/// terminal position to the goal. A flight that does not register every
/// planned collision is rejected.
pub fn score_candidate(candidate: &Candidate, query: &PlanQuery, cfg: &StepConfig) -> Result<(f64, Trajectory)> {
    score_with(candidate, query, cfg, simulate)
}

fn score_with(
    candidate: &Candidate,
    query: &PlanQuery,
    cfg: &StepConfig,
    sim: fn(&Scenario, &StepConfig) -> Result<Trajectory>,
) -> Result<(f64, Trajectory)> {
    let scenario = candidate_scenario(candidate, query)?;
    let traj = sim(&scenario, cfg)?;
    let planned = candidate.mode_sequence.len();
    let detected = traj.events_of(EventKind::CollisionDetected).count();
    if detected < planned {
        return Err(Error::MissedCollision { planned, detected });
    }
    let p = traj.last().state.position;
    let d = (p.x - query.goal[0]).hypot(p.y - query.goal[1]);
    if !d.is_finite() {
        return Err(Error::NonFinite("terminal position"));
    }
    Ok((d, traj))
}

/// Scores every candidate on the current rayon pool and returns the best.
pub fn plan(query: &PlanQuery, cfg: &StepConfig) -> Result<PlanResult> {
    let candidates = enumerate_candidates(query)?;
    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|c| score_with(c, query, cfg, simulate_endpoints).map_or(f64::INFINITY, |(d, _)| d))
        .collect();

    let mut best: Option<usize> = None;
    for (i, &d) in scores.iter().enumerate() {
        if !d.is_finite() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let better = d < scores[b]
                    || (d == scores[b] && candidates[i].total_impact_speed() < candidates[b].total_impact_speed());
                Some(if better { i } else { b })
            }
        };
    }
    let best = best.ok_or(Error::AllInfeasible(candidates.len()))?;
    let (terminal_distance, trajectory) = score_candidate(&candidates[best], query, cfg)?;
    Ok(PlanResult {
        best: candidates[best].clone(),
        terminal_distance,
        trajectory,
        all_scores: candidates
            .into_iter()
            .zip(scores)
            .map(|(candidate, terminal_distance)| ScoredCandidate {
                candidate,
                terminal_distance,
            })
            .collect(),
    })
}

/// [`plan`] on a dedicated pool with `jobs` worker threads.
pub fn plan_with_jobs(query: &PlanQuery, cfg: &StepConfig, jobs: usize) -> Result<PlanResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| invalid("jobs", e.to_string()))?;
    pool.install(|| plan(query, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ContactModel;
    use crate::frame::CollisionFrame;
    use crate::params::Surface;

    fn wall_query(n_collisions: usize) -> PlanQuery {
        let frame = CollisionFrame::new(
            Vector3::new(1.65, 0.0, 1.0),
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::z(),
            0.2,
        )
        .unwrap();
        PlanQuery {
            start: [0.0, 0.0],
            goal: [0.5, 0.5],
            z_ref: 1.0,
            obstacles: vec![Obstacle {
                name: "wall".into(),
                frame,
                contact: ContactModel::Preset(Surface::Acrylic),
            }],
            n_collisions,
            legs: Vec::new(),
            velocity_grid: VelocityGrid {
                resolution: 0.5,
                bound: 1.5,
            },
            modes_allowed: vec![Mode::Rigid, Mode::Flexible],
            timing: PlanTiming::default(),
            vehicle: VehicleParams::in_flight(),
            controller: ControllerConfig::default(),
        }
    }

    #[test]
    fn grid_points() {
        let g = VelocityGrid {
            resolution: 0.5,
            bound: 1.5,
        };
        assert_eq!(g.points().unwrap(), vec![-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5]);
        assert_eq!(VelocityGrid::default().points().unwrap().len(), 31);
        let fine = VelocityGrid {
            resolution: 0.05,
            bound: 1.5,
        }
        .points()
        .unwrap();
        for p in VelocityGrid::default().points().unwrap() {
            assert!(fine.contains(&p), "{p}");
        }
        assert!(VelocityGrid {
            resolution: 0.0,
            bound: 1.0
        }
        .points()
        .is_err());
    }

    #[test]
    fn candidate_counts() {
        assert_eq!(enumerate_candidates(&wall_query(1)).unwrap().len(), 98);
        assert_eq!(enumerate_candidates(&wall_query(2)).unwrap().len(), 9604);
        let mut q = wall_query(1);
        q.modes_allowed = vec![Mode::Rigid];
        assert_eq!(enumerate_candidates(&q).unwrap().len(), 49);
        assert_eq!(enumerate_candidates(&wall_query(0)).unwrap().len(), 1);
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let c = enumerate_candidates(&wall_query(1)).unwrap();
        assert_eq!(c[0].approach_velocity, vec![Some([-1.5, -1.5])]);
        assert_eq!(c[0].mode_sequence, vec![Mode::Rigid]);
        assert_eq!(c[1].mode_sequence, vec![Mode::Flexible]);
        assert_eq!(c[2].approach_velocity, vec![Some([-1.5, -1.0])]);
        assert_eq!(c[97].approach_velocity, vec![Some([1.5, 1.5])]);
    }

    #[test]
    fn carry_legs_have_no_velocity() {
        let mut q = wall_query(2);
        q.legs = vec![
            PlanLeg {
                obstacle: 0,
                policy: LegPolicy::Grid,
                alpha: [0.12, 0.025],
            },
            PlanLeg {
                obstacle: 0,
                policy: LegPolicy::Carry,
                alpha: [0.025, 0.025],
            },
        ];
        let c = enumerate_candidates(&q).unwrap();
        assert_eq!(c.len(), 49 * 4);
        assert!(c.iter().all(|c| c.approach_velocity[1].is_none()));
        q.legs.swap(0, 1);
        assert!(enumerate_candidates(&q).is_err());
    }

    #[test]
    fn frame_velocity_maps_to_inertial() {
        let q = wall_query(1);
        let c = Candidate {
            approach_velocity: vec![Some([-1.0, 0.5])],
            mode_sequence: vec![Mode::Rigid],
        };
        let s = candidate_scenario(&c, &q).unwrap();
        // X† = -x and Y† = -y for this wall.
        let legs = &s.controller.unwrap().mission.legs;
        assert_eq!(legs[0].approach, Approach::Velocity([1.0, -0.5]));
    }

    #[test]
    fn direct_flight_reaches_goal() {
        let q = wall_query(0);
        let r = plan(&q, &StepConfig::with_h(1e-3)).unwrap();
        assert!(r.terminal_distance < 0.05, "{}", r.terminal_distance);
        assert_eq!(r.all_scores.len(), 1);
    }
}

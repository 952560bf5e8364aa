//! Scenario files, trajectory and observation CSVs, and JSON reports.
//!
//! Configuration files are JSON objects carrying `"schema_version": 1` and a
//! `"kind"` of `drop_test`, `flight_collision` or `plan`. Unknown keys are
//! rejected.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::de::{DeserializeOwned, IgnoredAny};
use serde::{Deserialize, Serialize};

use crate::controller::{Approach, ControllerConfig, Leg, Mission};
use crate::dynamics::{
    drop_test_scenario, ContactModel, ControllerSetup, EventKind, Obstacle, Scenario, ScenarioKind, Trajectory,
};
use crate::error::{Error, Result};
use crate::frame::{CollisionFrame, State};
use crate::identification::{ObservedSample, ObservedTrajectory, ParamBounds};
use crate::params::{ContactParams, Mode, Surface, VehicleParams};
use crate::planner::{PlanLeg, PlanQuery, PlanTiming, VelocityGrid};

pub const SCHEMA_VERSION: u32 = 1;

pub const TRAJECTORY_HEADER: [&str; 15] = [
    "t", "x", "y", "z", "vx", "vy", "vz", "lam_x", "lam_y", "lam_z", "contact", "mode", "setx", "sety", "setz",
];
pub const EVENTS_HEADER: [&str; 2] = ["t", "event"];
pub const OBSERVED_HEADER: [&str; 3] = ["t", "gap", "gap_rate"];
pub const OBSERVED_LATERAL_HEADER: [&str; 7] = ["t", "gap", "gap_rate", "y", "vy", "z", "vz"];

/// A loaded configuration file.
#[derive(Debug, Clone)]
pub enum Config {
    Scenario(Scenario),
    Plan(PlanQuery),
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    DropTest,
    FlightCollision,
    Plan,
}

#[derive(Deserialize)]
struct KindOnly {
    kind: Kind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsFile {
    pub k: f64,
    pub f: f64,
    pub mu: f64,
    pub nu: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DropTestFile {
    #[allow(dead_code)]
    kind: IgnoredAny,
    schema_version: u32,
    height: f64,
    mode: Mode,
    #[serde(default = "concrete")]
    surface: Surface,
    #[serde(default)]
    duration: Option<f64>,
    /// Overrides the preset coefficients of `mode`.
    #[serde(default)]
    coefficients: Option<CoefficientsFile>,
    #[serde(default)]
    vehicle: Option<VehicleParams>,
}

fn concrete() -> Surface {
    Surface::Concrete
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleFile {
    name: String,
    /// Any point on the contact plane, m.
    point: [f64; 3],
    /// Outward normal, pointing toward the free side.
    normal: [f64; 3],
    #[serde(default = "up")]
    up_hint: [f64; 3],
    #[serde(default = "rest_offset")]
    rest_offset: f64,
    surface: Surface,
    #[serde(default)]
    rigid: Option<CoefficientsFile>,
    #[serde(default)]
    flexible: Option<CoefficientsFile>,
}

fn up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn rest_offset() -> f64 {
    crate::dynamics::DROP_REST_OFFSET
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LegFile {
    approach: Approach,
    alpha: [f64; 2],
    /// Obstacle this collision is expected on.
    #[serde(default)]
    obstacle: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MissionFile {
    z_ref: f64,
    #[serde(default)]
    hold: Option<[f64; 3]>,
    legs: Vec<LegFile>,
    #[serde(default)]
    timing: PlanTiming,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlightFile {
    #[allow(dead_code)]
    kind: IgnoredAny,
    schema_version: u32,
    initial_position: [f64; 3],
    #[serde(default)]
    initial_velocity: [f64; 3],
    obstacles: Vec<ObstacleFile>,
    mode_schedule: Vec<Mode>,
    duration: f64,
    #[serde(default = "VehicleParams::in_flight")]
    vehicle: VehicleParams,
    #[serde(default)]
    controller: ControllerConfig,
    mission: MissionFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    #[allow(dead_code)]
    kind: IgnoredAny,
    schema_version: u32,
    start: [f64; 2],
    goal: [f64; 2],
    z_ref: f64,
    obstacles: Vec<ObstacleFile>,
    n_collisions: usize,
    #[serde(default)]
    legs: Vec<PlanLeg>,
    #[serde(default)]
    velocity_grid: VelocityGrid,
    #[serde(default = "all_modes")]
    modes_allowed: Vec<Mode>,
    #[serde(default)]
    timing: PlanTiming,
    #[serde(default = "VehicleParams::in_flight")]
    vehicle: VehicleParams,
    #[serde(default)]
    controller: ControllerConfig,
}

fn all_modes() -> Vec<Mode> {
    Mode::ALL.to_vec()
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(crate::error::invalid(
            "schema_version",
            format!("unsupported version {v}, expected {SCHEMA_VERSION}"),
        ));
    }
    Ok(())
}

fn coefficients(c: CoefficientsFile, mode: Mode, surface: Surface) -> ContactParams {
    ContactParams::new(c.k, c.f, c.mu, c.nu, mode, surface.to_string())
}

fn obstacles(files: Vec<ObstacleFile>) -> Result<Vec<Obstacle>> {
    files
        .into_iter()
        .enumerate()
        .map(|(i, o)| {
            let frame = CollisionFrame::new(
                Vector3::from(o.point),
                Vector3::from(o.normal),
                Vector3::from(o.up_hint),
                o.rest_offset,
            )
            .map_err(|e| match e {
                Error::InvalidParameter { field, reason } => {
                    crate::error::invalid(format!("obstacles[{i}].{field}"), reason)
                }
                Error::DegenerateFrame(m) => Error::DegenerateFrame(format!("obstacles[{i}]: {m}")),
                other => other,
            })?;
            let mut contact = ContactModel::Preset(o.surface);
            if let Some(c) = o.rigid {
                contact = contact.with_params(coefficients(c, Mode::Rigid, o.surface));
            }
            if let Some(c) = o.flexible {
                contact = contact.with_params(coefficients(c, Mode::Flexible, o.surface));
            }
            Ok(Obstacle {
                name: o.name,
                frame,
                contact,
            })
        })
        .collect()
}

impl DropTestFile {
    fn build(self) -> Result<Scenario> {
        check_version(self.schema_version)?;
        let mut s = drop_test_scenario(self.height, self.mode, self.surface)?;
        if let Some(d) = self.duration {
            s.duration = d;
        }
        if let Some(c) = self.coefficients {
            s = s.with_contact_params(&coefficients(c, self.mode, self.surface));
        }
        if let Some(v) = self.vehicle {
            s.vehicle = v;
        }
        s.validate()?;
        Ok(s)
    }
}

impl FlightFile {
    fn build(self) -> Result<Scenario> {
        check_version(self.schema_version)?;
        let obstacles = obstacles(self.obstacles)?;
        let m = self.mission;
        let mut legs = Vec::with_capacity(m.legs.len());
        for (i, l) in m.legs.into_iter().enumerate() {
            let plane = match l.obstacle {
                Some(k) => Some(
                    obstacles
                        .get(k)
                        .ok_or_else(|| crate::error::invalid(format!("mission.legs[{i}].obstacle"), "out of range"))?
                        .frame,
                ),
                None => None,
            };
            legs.push(Leg {
                approach: l.approach,
                alpha: l.alpha,
                plane,
            });
        }
        let hold = m.hold.map_or(
            Vector3::new(self.initial_position[0], self.initial_position[1], m.z_ref),
            Vector3::from,
        );
        let s = Scenario {
            kind: ScenarioKind::FlightCollision,
            initial_state: State::new(
                Vector3::from(self.initial_position),
                Vector3::from(self.initial_velocity),
            ),
            obstacles,
            mode_schedule: self.mode_schedule,
            duration: self.duration,
            vehicle: self.vehicle,
            controller: Some(ControllerSetup {
                config: self.controller,
                mission: Mission {
                    z_ref: m.z_ref,
                    legs,
                    hold,
                    recovery_time: m.timing.recovery_time,
                    settle_time: m.timing.settle_time,
                    approach_timeout: m.timing.approach_timeout,
                },
            }),
            gravity_axis: -Vector3::z(),
        };
        s.validate()?;
        Ok(s)
    }
}

impl PlanFile {
    fn build(self) -> Result<PlanQuery> {
        check_version(self.schema_version)?;
        let q = PlanQuery {
            start: self.start,
            goal: self.goal,
            z_ref: self.z_ref,
            obstacles: obstacles(self.obstacles)?,
            n_collisions: self.n_collisions,
            legs: self.legs,
            velocity_grid: self.velocity_grid,
            modes_allowed: self.modes_allowed,
            timing: self.timing,
            vehicle: self.vehicle,
            controller: self.controller,
        };
        q.validate()?;
        for (i, o) in q.obstacles.iter().enumerate() {
            for mode in Mode::ALL {
                o.contact.params(mode).validate().map_err(|e| match e {
                    Error::InvalidParameter { field, reason } => {
                        crate::error::invalid(format!("obstacles[{i}].{mode}.{field}"), reason)
                    }
                    other => other,
                })?;
            }
        }
        Ok(q)
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<Config> {
    fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
        serde_json::from_str(text).map_err(|e| Error::Config {
            path: "<config>".into(),
            message: e.to_string(),
        })
    }
    match parse::<KindOnly>(text)?.kind {
        Kind::DropTest => parse::<DropTestFile>(text)?.build().map(Config::Scenario),
        Kind::FlightCollision => parse::<FlightFile>(text)?.build().map(Config::Scenario),
        Kind::Plan => parse::<PlanFile>(text)?.build().map(Config::Plan),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Config { message, .. } => Error::Config {
            path: path.display().to_string(),
            message,
        },
        other => Error::Config {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    }
}

pub fn load_config(path: &Path) -> Result<Config> {
    parse_config(&read_text(path)?).map_err(|e| with_path(path, e))
}

/// Loads a drop-test or flight scenario.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    match load_config(path)? {
        Config::Scenario(s) => Ok(s),
        Config::Plan(_) => Err(with_path(
            path,
            crate::error::invalid("kind", "expected a scenario, found a plan query"),
        )),
    }
}

pub fn load_plan_query(path: &Path) -> Result<PlanQuery> {
    match load_config(path)? {
        Config::Plan(q) => Ok(q),
        Config::Scenario(_) => Err(with_path(path, crate::error::invalid("kind", "expected a plan query"))),
    }
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_params(path: &Path) -> Result<ContactParams> {
    let p: ContactParams = load_json(path)?;
    p.validate().map_err(|e| with_path(path, e))?;
    Ok(p)
}

pub fn load_bounds(path: &Path) -> Result<ParamBounds> {
    let b: ParamBounds = load_json(path)?;
    b.validate().map_err(|e| with_path(path, e))?;
    Ok(b)
}

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io_error(path, e))
}

/// Sibling events file: `run.csv` → `run.events.csv`.
pub fn events_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "trajectory".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.events.csv"))
}

fn event_label(kind: EventKind, index: usize) -> String {
    match kind {
        EventKind::ContactStart => format!("contact_start:{index}"),
        EventKind::ContactEnd => format!("contact_end:{index}"),
        EventKind::CollisionDetected => format!("collision_detected:{index}"),
        EventKind::ModeSwitch => format!("mode_switch:{index}"),
    }
}

/// Writes one row per sample plus the sibling events file. Numbers carry
/// nine significant digits.
pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e: csv::Error| io_error(path, e);
    w.write_record(TRAJECTORY_HEADER).map_err(err)?;
    for s in &traj.samples {
        let force = s.inertial_force(&traj.frames);
        let p = s.state.position;
        let v = s.state.velocity;
        let mut row: Vec<String> = [s.t, p.x, p.y, p.z, v.x, v.y, v.z, force.x, force.y, force.z]
            .into_iter()
            .map(num)
            .collect();
        row.push(if s.force.active { "1" } else { "0" }.into());
        row.push(s.mode.index().to_string());
        match s.setpoint {
            Some(sp) => row.extend(sp.iter().map(|&c| num(c))),
            None => row.extend(std::iter::repeat_n(String::new(), 3)),
        }
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| io_error(path, e))?;

    let epath = events_path(path);
    let mut w = csv_writer(&epath)?;
    let err = |e: csv::Error| io_error(&epath, e);
    w.write_record(EVENTS_HEADER).map_err(err)?;
    for e in &traj.events {
        w.write_record([num(e.t), event_label(e.kind, e.index)]).map_err(err)?;
    }
    w.flush().map_err(|e| io_error(&epath, e))?;
    Ok(())
}

/// One row of a trajectory CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub state: State,
    pub force: Vector3<f64>,
    pub contact: bool,
    pub mode: Mode,
    pub setpoint: Option<Vector3<f64>>,
}

fn parse_f64(path: &Path, line: u64, field: &str, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Config {
        path: path.display().to_string(),
        message: format!("line {line}: column `{field}` is not a number: {s:?}"),
    })
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new().from_path(path).map_err(|e| io_error(path, e))
}

fn header_of(path: &Path, r: &mut csv::Reader<fs::File>) -> Result<Vec<String>> {
    Ok(r.headers()
        .map_err(|e| io_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect())
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let mut r = reader(path)?;
    if header_of(path, &mut r)? != TRAJECTORY_HEADER {
        return Err(Error::Config {
            path: path.display().to_string(),
            message: "not a trajectory file: unexpected header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_error(path, e))?;
        let line = i as u64 + 2;
        let f = |k: usize| parse_f64(path, line, TRAJECTORY_HEADER[k], &rec[k]);
        let mode = match rec[11].trim() {
            "1" => Mode::Rigid,
            "2" => Mode::Flexible,
            other => {
                return Err(Error::Config {
                    path: path.display().to_string(),
                    message: format!("line {line}: unknown mode {other:?}"),
                })
            }
        };
        let setpoint = if rec[12].trim().is_empty() {
            None
        } else {
            Some(Vector3::new(f(12)?, f(13)?, f(14)?))
        };
        rows.push(TrajectoryRow {
            t: f(0)?,
            state: State::new(Vector3::new(f(1)?, f(2)?, f(3)?), Vector3::new(f(4)?, f(5)?, f(6)?)),
            force: Vector3::new(f(7)?, f(8)?, f(9)?),
            contact: rec[10].trim() == "1",
            mode,
            setpoint,
        });
    }
    Ok(rows)
}

pub fn write_observed(obs: &ObservedTrajectory, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e: csv::Error| io_error(path, e);
    if obs.has_lateral() {
        w.write_record(OBSERVED_LATERAL_HEADER).map_err(err)?;
    } else {
        w.write_record(OBSERVED_HEADER).map_err(err)?;
    }
    for s in &obs.samples {
        let mut row = vec![num(s.t), num(s.gap), num(s.gap_rate)];
        if let Some(l) = s.lateral {
            row.extend(l.iter().map(|&v| num(v)));
        }
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// Reads an observation CSV, or a trajectory CSV projected onto `frame`.
pub fn read_observed(path: &Path, frame: Option<&CollisionFrame>) -> Result<ObservedTrajectory> {
    let source = path.display().to_string();
    let mut r = reader(path)?;
    let header = header_of(path, &mut r)?;
    let samples = if header == TRAJECTORY_HEADER {
        let frame = frame.ok_or_else(|| Error::Config {
            path: source.clone(),
            message: "trajectory files need a collision frame to be read as observations".into(),
        })?;
        drop(r);
        read_trajectory(path)?
            .into_iter()
            .map(|row| {
                let cf = frame.to_frame(&row.state);
                ObservedSample {
                    t: row.t,
                    gap: cf.gap(),
                    gap_rate: cf.normal_speed(),
                    lateral: Some([cf.position.y, cf.velocity.y, cf.position.z, cf.velocity.z]),
                }
            })
            .collect()
    } else if header == OBSERVED_HEADER || header == OBSERVED_LATERAL_HEADER {
        let lateral = header.len() == OBSERVED_LATERAL_HEADER.len();
        let mut out = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| io_error(path, e))?;
            let line = i as u64 + 2;
            let f = |k: usize| parse_f64(path, line, OBSERVED_LATERAL_HEADER[k], &rec[k]);
            out.push(ObservedSample {
                t: f(0)?,
                gap: f(1)?,
                gap_rate: f(2)?,
                lateral: if lateral {
                    Some([f(3)?, f(4)?, f(5)?, f(6)?])
                } else {
                    None
                },
            });
        }
        out
    } else {
        return Err(Error::Config {
            path: source,
            message: format!("unrecognized header {header:?}"),
        });
    };
    ObservedTrajectory::new(samples, source)
}

/// Envelope shared by every JSON report.
#[derive(Debug, Serialize)]
pub struct Report<'a, I: Serialize, R: Serialize> {
    pub schema: &'static str,
    pub version: u32,
    pub kind: &'a str,
    pub inputs: I,
    pub result: R,
}

pub fn write_report<I: Serialize, R: Serialize>(path: &Path, kind: &str, inputs: I, result: R) -> Result<()> {
    let report = Report {
        schema: "quadcollide-report",
        version: SCHEMA_VERSION,
        kind,
        inputs,
        result,
    };
    write_json(path, &report)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

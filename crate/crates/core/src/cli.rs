//! Command-line drivers behind the `quadcollide` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::contact::StepConfig;
use crate::dynamics::{simulate, Scenario, ScenarioKind, Trajectory};
use crate::error::{Error, Result};
use crate::identification::{contact_metrics, fit_contact_params, validate_params, ContactMetrics, ObservedTrajectory};
use crate::io::{self, write_json, write_report};
use crate::planner::{plan_with_jobs, ScoredCandidate};

#[derive(Debug, Parser)]
#[command(
    name = "quadcollide",
    version,
    about = "Collision simulation, planning and identification for dual-stiffness quadrotors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an unpowered drop onto the ground plane.
    SimulateDrop(SimulateDropArgs),
    /// Simulate a controlled flight with wall collisions.
    SimulateFlight(SimulateArgs),
    /// Search impact velocities and mode sequences for a plan query.
    Plan(PlanArgs),
    /// Fit contact coefficients to an observed trace.
    Identify(IdentifyArgs),
    /// Score contact coefficients against a held-out trace.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct StepArgs {
    /// Integration step, s.
    #[arg(long, default_value_t = 1e-4)]
    pub h: f64,
}

impl StepArgs {
    fn config(&self) -> Result<StepConfig> {
        let cfg = StepConfig::with_h(self.h);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub step: StepArgs,
}

#[derive(Debug, Args)]
pub struct SimulateDropArgs {
    #[command(flatten)]
    pub sim: SimulateArgs,
    /// Relative standard deviation of noise added to the observed normal
    /// velocity, as a fraction of the peak speed.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Seed for the observation noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sampling interval of the observed trace, s.
    #[arg(long, default_value_t = 1e-3)]
    pub frame_interval: f64,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Plan query file (JSON).
    #[arg(long)]
    pub query: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the velocity grid resolution, m/s.
    #[arg(long)]
    pub grid: Option<f64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub step: StepArgs,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// Observed trace: an observation CSV or a trajectory CSV.
    #[arg(long)]
    pub observed: PathBuf,
    /// Scenario reproducing the observed setup.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Parameter bounds file (JSON).
    #[arg(long)]
    pub bounds: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub step: StepArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Contact parameters file (JSON), e.g. `params.json` from `identify`.
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub observed: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub step: StepArgs,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Serialize)]
struct SimulationSummary {
    samples: usize,
    events: usize,
    final_time: f64,
    metrics: Option<ContactMetrics>,
}

fn summarize(traj: &Trajectory, scenario: &Scenario) -> SimulationSummary {
    SimulationSummary {
        samples: traj.samples.len(),
        events: traj.events.len(),
        final_time: traj.last().t,
        metrics: contact_metrics(traj, &scenario.vehicle).ok(),
    }
}

#[derive(Serialize)]
struct SimulationInputs<'a> {
    scenario: &'a Path,
    step: StepConfig,
}

fn simulate_to(args: &SimulateArgs, expect: ScenarioKind) -> Result<(Scenario, Trajectory)> {
    let scenario = io::load_scenario(&args.scenario)?;
    if scenario.kind != expect {
        return Err(Error::Config {
            path: args.scenario.display().to_string(),
            message: format!("expected a {expect:?} scenario, found {:?}", scenario.kind),
        });
    }
    let cfg = args.step.config()?;
    let traj = simulate(&scenario, &cfg)?;
    create_dir(&args.out)?;
    io::write_trajectory(&traj, &args.out.join("trajectory.csv"))?;
    write_report(
        &args.out.join("report.json"),
        "simulate",
        SimulationInputs {
            scenario: &args.scenario,
            step: cfg,
        },
        summarize(&traj, &scenario),
    )?;
    Ok((scenario, traj))
}

pub fn simulate_drop(args: &SimulateDropArgs) -> Result<()> {
    if !(args.noise.is_finite() && args.noise >= 0.0) {
        return Err(crate::error::invalid("noise", "must be finite and >= 0"));
    }
    if !(args.frame_interval.is_finite() && args.frame_interval > 0.0) {
        return Err(crate::error::invalid("frame_interval", "must be finite and > 0"));
    }
    let (_, traj) = simulate_to(&args.sim, ScenarioKind::DropTest)?;
    let stride = (args.frame_interval / traj.h).round().max(1.0) as usize;
    let observed = ObservedTrajectory::from_trajectory(&traj, 0, stride, args.sim.scenario.display().to_string())
        .without_lateral()
        .with_velocity_noise(args.noise, args.seed);
    io::write_observed(&observed, &args.sim.out.join("observed.csv"))
}

pub fn simulate_flight(args: &SimulateArgs) -> Result<()> {
    simulate_to(args, ScenarioKind::FlightCollision).map(|_| ())
}

#[derive(Serialize)]
struct PlanSummary<'a> {
    best: &'a crate::planner::Candidate,
    terminal_distance: f64,
    candidates: usize,
    feasible: usize,
    scores: &'a [ScoredCandidate],
}

pub fn plan(args: &PlanArgs) -> Result<()> {
    let mut query = io::load_plan_query(&args.query)?;
    if let Some(g) = args.grid {
        query.velocity_grid.resolution = g;
        query.velocity_grid.validate()?;
    }
    let cfg = args.step.config()?;
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let result = plan_with_jobs(&query, &cfg, jobs)?;
    create_dir(&args.out)?;
    io::write_trajectory(&result.trajectory, &args.out.join("trajectory.csv"))?;
    #[derive(Serialize)]
    struct Inputs<'a> {
        query_path: &'a Path,
        query: &'a crate::planner::PlanQuery,
        step: StepConfig,
    }
    write_report(
        &args.out.join("report.json"),
        "plan",
        Inputs {
            query_path: &args.query,
            query: &query,
            step: cfg,
        },
        PlanSummary {
            best: &result.best,
            terminal_distance: result.terminal_distance,
            candidates: result.all_scores.len(),
            feasible: result
                .all_scores
                .iter()
                .filter(|s| s.terminal_distance.is_finite())
                .count(),
            scores: &result.all_scores,
        },
    )
}

fn observation_for(path: &Path, scenario: &Scenario) -> Result<ObservedTrajectory> {
    io::read_observed(path, scenario.obstacles.first().map(|o| &o.frame))
}

pub fn identify(args: &IdentifyArgs) -> Result<()> {
    let scenario = io::load_scenario(&args.scenario)?;
    let bounds = io::load_bounds(&args.bounds)?;
    let observed = observation_for(&args.observed, &scenario)?;
    let cfg = args.step.config()?;
    let fit = fit_contact_params(&observed, &scenario, &bounds, &cfg)?;
    create_dir(&args.out)?;
    write_json(&args.out.join("params.json"), &fit.params)?;
    #[derive(Serialize)]
    struct Inputs<'a> {
        observed: &'a Path,
        scenario: &'a Path,
        bounds: &'a crate::identification::ParamBounds,
        step: StepConfig,
    }
    write_report(
        &args.out.join("report.json"),
        "identify",
        Inputs {
            observed: &args.observed,
            scenario: &args.scenario,
            bounds: &bounds,
            step: cfg,
        },
        &fit,
    )
}

pub fn validate(args: &ValidateArgs) -> Result<()> {
    let scenario = io::load_scenario(&args.scenario)?;
    let params = io::load_params(&args.params)?;
    let observed = observation_for(&args.observed, &scenario)?;
    let cfg = args.step.config()?;
    let report = validate_params(&params, &observed, &scenario, &cfg)?;
    create_dir(&args.out)?;
    #[derive(Serialize)]
    struct Inputs<'a> {
        params_path: &'a Path,
        observed: &'a Path,
        scenario: &'a Path,
        step: StepConfig,
    }
    write_report(
        &args.out.join("report.json"),
        "validate",
        Inputs {
            params_path: &args.params,
            observed: &args.observed,
            scenario: &args.scenario,
            step: cfg,
        },
        &report,
    )
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::SimulateDrop(a) => simulate_drop(a),
        Command::SimulateFlight(a) => simulate_flight(a),
        Command::Plan(a) => plan(a),
        Command::Identify(a) => identify(a),
        Command::Validate(a) => validate(a),
    }
}

//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! (visible with `--nocapture`) and then asserts it.

mod common;

use std::cell::Cell;
use std::time::Instant;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};
use quadcollide::dynamics::EventKind;
use quadcollide::identification::{contact_metrics, fit_contact_params, validate_params, ParamBounds};
use quadcollide::io::{load_config, load_plan_query, write_trajectory, Config};
use quadcollide::lcp::{solve_lcp_lemke, solve_lcp_scalar, LcpProblem, DEFAULT_MAX_PIVOTS};
use quadcollide::planner::{enumerate_candidates, plan, VelocityGrid};
use quadcollide::{mode_params, simulate, ContactParams, Mode, StepConfig, Surface};

fn verdict(criterion: u32, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {tag} | {detail}");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    rel_err(value, target) <= rel
}

fn drop_checks(height: f64, targets: [(Mode, f64, f64); 2]) -> (bool, String) {
    let mut ok = true;
    let mut detail = Vec::new();
    for (mode, contact_ms, rebound) in targets {
        let start = Instant::now();
        let (sc, traj) = drop_trajectory(height, mode, 1e-4);
        let elapsed = start.elapsed().as_secs_f64();
        let m = contact_metrics(&traj, &sc.vehicle).unwrap();
        let pass = within(1e3 * m.contact_time, contact_ms, 0.20)
            && within(m.rebound_velocity, rebound, 0.15)
            && elapsed < 1.0;
        ok &= pass;
        detail.push(format!(
            "{mode}: contact {:.1} ms (target {contact_ms}), rebound {:.3} m/s (target {rebound}), {:.3} s",
            1e3 * m.contact_time,
            m.rebound_velocity,
            elapsed
        ));
    }
    (ok, detail.join("; "))
}

#[test]
fn criterion_1_drop_fit_set() {
    let (ok, detail) = drop_checks(0.05, [(Mode::Rigid, 46.0, 0.74), (Mode::Flexible, 177.0, 0.70)]);
    verdict(1, ok, &detail);
}

#[test]
fn criterion_2_drop_validation_set() {
    let (ok, detail) = drop_checks(0.2, [(Mode::Rigid, 52.0, 1.59), (Mode::Flexible, 145.0, 1.34)]);
    verdict(2, ok, &detail);
}

#[test]
fn criterion_3_identification_round_trip() {
    let cfg = StepConfig::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for (mode, bounds) in [
        (Mode::Rigid, ParamBounds::new([2000.0, 10000.0], [2.0, 30.0])),
        (Mode::Flexible, ParamBounds::new([200.0, 2500.0], [2.0, 30.0])),
    ] {
        let truth = mode_params(mode, Surface::Concrete);
        let (sc, obs) = observe_drop(0.05, mode);
        let start = Instant::now();
        let fit = fit_contact_params(&obs, &sc, &bounds, &cfg).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        let (held_sc, held_obs) = observe_drop(0.2, mode);
        let report = validate_params(&fit.params, &held_obs, &held_sc, &cfg).unwrap();
        let acc = report.peak("rebound_velocity").unwrap().accuracy;
        let pass = rel_err(fit.params.k, truth.k) <= 0.02
            && rel_err(fit.params.f, truth.f) <= 0.05
            && acc >= 0.8
            && elapsed < 60.0;
        ok &= pass;
        detail.push(format!(
            "{mode}: k {:.1} (true {}), f {:.3} (true {}), held-out rebound accuracy {:.1}%, fit {:.2} s",
            fit.params.k,
            truth.k,
            fit.params.f,
            truth.f,
            100.0 * acc,
            elapsed
        ));
    }
    verdict(3, ok, &detail.join("; "));
}

#[test]
fn criterion_4_lcp_solvers() {
    let start = Instant::now();
    let mut runner = TestRunner::new(PtConfig {
        cases: 1000,
        ..PtConfig::default()
    });
    let worst_scalar = Cell::new(0.0f64);
    runner
        .run(&(0.5f64..5.0, -10.0f64..10.0), |(m, q)| {
            let p = LcpProblem::scalar(m, q);
            let s = solve_lcp_scalar(&p).unwrap();
            let l = solve_lcp_lemke(&p, DEFAULT_MAX_PIVOTS).unwrap();
            prop_assert!(s.lambda >= 0.0 && s.w >= -1e-10);
            prop_assert!((s.lambda * s.w).abs() <= 1e-10);
            prop_assert!((s.lambda - l.z[0]).abs() < 1e-10);
            worst_scalar.set(worst_scalar.get().max((s.lambda * s.w).abs()));
            Ok(())
        })
        .unwrap();

    let mut runner = TestRunner::new(PtConfig {
        cases: 200,
        ..PtConfig::default()
    });
    let strategy = (1usize..=5).prop_flat_map(|n| {
        (
            Just(n),
            proptest::collection::vec(-1.0f64..1.0, n * n),
            proptest::collection::vec(-5.0f64..5.0, n),
        )
    });
    let worst_gap = Cell::new(0.0f64);
    runner
        .run(&strategy, |(n, a, q)| {
            let a = DMatrix::from_vec(n, n, a);
            let m = a.transpose() * &a + DMatrix::identity(n, n) * 0.1;
            let q = DVector::from_vec(q);
            let p = LcpProblem::new(m.clone(), q.clone()).unwrap();
            let lemke = solve_lcp_lemke(&p, DEFAULT_MAX_PIVOTS).unwrap();
            let brute = brute_force_lcp(&m, &q).expect("positive-definite LCP has a solution");
            let gap = (&lemke.z - &brute).amax();
            prop_assert!(gap < 1e-8, "lemke {} vs brute force {}", lemke.z, brute);
            worst_gap.set(worst_gap.get().max(gap));
            Ok(())
        })
        .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        4,
        elapsed < 5.0,
        &format!(
            "1000 scalar problems, worst |lambda*w| {:.1e}; 200 Lemke problems, worst deviation {:.1e}; {elapsed:.2} s",
            worst_scalar.get(),
            worst_gap.get()
        ),
    );
}

fn worst_energy_rise(params: &ContactParams) -> f64 {
    let sc = drop_with(0.2, params);
    let traj = simulate(&sc, &StepConfig::default()).unwrap();
    let v = &sc.vehicle;
    let energy = |s: &quadcollide::dynamics::Sample| {
        let gap = traj.frames[0].gap(&s.state.position);
        let spring = if gap < 0.0 { 0.5 * params.k * gap * gap } else { 0.0 };
        0.5 * v.mass * s.state.velocity.norm_squared() + v.mass * v.gravity * s.state.position.z + spring
    };
    let mut worst = f64::NEG_INFINITY;
    for w in traj.samples.windows(2) {
        if w[1].force.active {
            worst = worst.max(energy(&w[1]) - energy(&w[0]));
        }
    }
    worst
}

#[test]
fn criterion_5_physical_properties() {
    let mut checks = Vec::new();

    // Checked with nu = 0; the nu term is reported separately.
    let mut energy_ok = true;
    let mut worst_energy = f64::NEG_INFINITY;
    let mut with_nu = f64::NEG_INFINITY;
    for mode in [Mode::Rigid, Mode::Flexible] {
        let mut p = mode_params(mode, Surface::Concrete);
        with_nu = with_nu.max(worst_energy_rise(&p));
        p.nu = 0.0;
        let rise = worst_energy_rise(&p);
        worst_energy = worst_energy.max(rise);
        energy_ok &= rise <= 1e-9;
    }
    checks.push((
        energy_ok,
        format!("energy rise {worst_energy:.1e} J (nu = 0), {with_nu:.1e} J with the preset nu"),
    ));

    let mut elastic_ok = true;
    let mut elastic = Vec::new();
    for mode in [Mode::Rigid, Mode::Flexible] {
        let mut p = mode_params(mode, Surface::Concrete);
        (p.f, p.mu, p.nu) = (0.0, 0.0, 0.0);
        let (out, _) = bounce(&p, 1.0, 1e-4);
        let loss = rel_err(out, 1.0);
        elastic_ok &= loss < 0.01;
        elastic.push(format!("k={} {:.3}%", p.k, 100.0 * loss));
    }
    checks.push((elastic_ok, format!("elastic loss {}", elastic.join(", "))));

    let mut monotone_ok = true;
    let mut last = f64::INFINITY;
    for f in [0.0, 5.0, 10.0, 15.0, 20.0] {
        let mut p = mode_params(Mode::Rigid, Surface::Concrete);
        p.f = f;
        let (out, _) = bounce(&p, 1.0, 1e-4);
        monotone_ok &= out <= last;
        last = out;
    }
    checks.push((monotone_ok, "restitution non-increasing in f".to_string()));

    let mut sat_ok = true;
    let mut sat_steps = 0usize;
    for path in bundled_scenarios() {
        if let Config::Scenario(sc) = load_config(&path).unwrap() {
            let traj = simulate(&sc, &StepConfig::default()).unwrap();
            for s in &traj.samples {
                if let Some(i) = s.contact_obstacle {
                    let nu = sc.obstacles[i].contact.params(s.mode).nu;
                    sat_ok &= s.force.lambda_z.abs() < nu || nu == 0.0;
                    sat_steps += 1;
                }
            }
        }
    }
    checks.push((sat_ok, format!("|lambda_z| < nu over {sat_steps} contact steps")));

    let peak = |h: f64| {
        let (_, traj) = drop_trajectory(0.05, Mode::Rigid, h);
        traj.samples.iter().map(|s| s.force.lambda_x).fold(0.0, f64::max)
    };
    let (p1, p2) = (peak(1e-4), peak(5e-5));
    let halving = rel_err(p2, p1);
    checks.push((
        halving < 0.02,
        format!("step halving changes peak by {:.2}%", 100.0 * halving),
    ));

    let ok = checks.iter().all(|c| c.0);
    let detail: Vec<_> = checks
        .iter()
        .map(|(p, d)| format!("{}{d}", if *p { "" } else { "[fail] " }))
        .collect();
    verdict(5, ok, &detail.join("; "));
}

#[test]
fn criterion_6_planner() {
    let cfg = StepConfig::with_h(1e-3);
    let mut invariants_ok = true;
    for (wall_x, goal) in [(1.0, [0.3, 0.5]), (1.2, [-0.2, 0.8]), (0.8, [0.0, -0.6])] {
        let coarse = single_wall_query(wall_x, goal, 0.5);
        let fine = single_wall_query(wall_x, goal, 0.25);
        let rc = plan(&coarse, &cfg).unwrap();
        let rf = plan(&fine, &cfg).unwrap();
        let min = |r: &quadcollide::planner::PlanResult| {
            r.all_scores
                .iter()
                .map(|s| s.terminal_distance)
                .fold(f64::INFINITY, f64::min)
        };
        invariants_ok &= rc.terminal_distance == min(&rc) && rf.terminal_distance == min(&rf);
        invariants_ok &= rc.all_scores.len() == enumerate_candidates(&coarse).unwrap().len();
        invariants_ok &= rf.terminal_distance <= rc.terminal_distance;
    }

    let query = load_plan_query(&scenario_path("dual_collision")).unwrap();
    let grid: VelocityGrid = query.velocity_grid;
    let start = Instant::now();
    let result = plan(&query, &StepConfig::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let modes_ok = result.best.mode_sequence == [Mode::Flexible, Mode::Rigid];
    let v = result.best.approach_velocity[0].unwrap();
    let cell = grid.resolution + 1e-9;
    let velocity_ok = (v[0] + 0.6).abs() <= cell && (v[1] - 0.5).abs() <= cell;
    verdict(
        6,
        invariants_ok && modes_ok && velocity_ok && elapsed < 60.0,
        &format!(
            "randomized invariants {}; dual collision: modes {:?} ({}), velocity ({:.1}, {:.1}) vs (-0.6, 0.5) ({}), distance {:.3} m, {} candidates in {:.1} s",
            if invariants_ok { "hold" } else { "violated" },
            result.best.mode_sequence,
            if modes_ok { "match" } else { "mismatch" },
            v[0],
            v[1],
            if velocity_ok { "within one cell" } else { "outside one cell" },
            result.terminal_distance,
            result.all_scores.len(),
            elapsed
        ),
    );
}

#[test]
fn criterion_7_force_estimate_consistency() {
    let sc = match load_config(&scenario_path("flight_acrylic_rigid")).unwrap() {
        Config::Scenario(sc) => sc,
        Config::Plan(_) => unreachable!(),
    };
    let traj = simulate(&sc, &StepConfig::default()).unwrap();
    let mut worst = 0.0f64;
    let mut peak_applied = 0.0f64;
    let mut peak_estimated = 0.0f64;
    for s in traj.samples.iter().filter(|s| s.force.active) {
        let applied = s.inertial_force(&traj.frames);
        let err = (s.estimate - applied).norm() / applied.norm();
        worst = worst.max(err);
        peak_applied = peak_applied.max(s.force.lambda_x);
        peak_estimated = peak_estimated.max(traj.frames[0].normal().dot(&s.estimate));
    }
    let peak_err = rel_err(peak_estimated, peak_applied);
    let detections = traj.events_of(EventKind::CollisionDetected).count();
    verdict(
        7,
        worst <= 0.01 && peak_err <= 0.01 && detections == 1,
        &format!(
            "peak applied {peak_applied:.2} N, peak estimated {peak_estimated:.2} N; worst per-step deviation {:.2e}; {detections} detection(s)",
            worst
        ),
    );
}

#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut checked = Vec::new();
    let mut ok = true;
    for path in bundled_scenarios() {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let mut outputs = Vec::new();
        for run in 0..2 {
            let traj = match load_config(&path).unwrap() {
                Config::Scenario(sc) => simulate(&sc, &StepConfig::default()).unwrap(),
                Config::Plan(mut q) => {
                    q.velocity_grid.resolution = 0.5;
                    plan(&q, &StepConfig::with_h(1e-3)).unwrap().trajectory
                }
            };
            let out = dir.path().join(format!("{name}_{run}.csv"));
            write_trajectory(&traj, &out).unwrap();
            let events = quadcollide::io::events_path(&out);
            outputs.push((std::fs::read(&out).unwrap(), std::fs::read(&events).unwrap()));
        }
        ok &= outputs[0] == outputs[1];
        checked.push(name);
    }
    verdict(
        8,
        ok && !checked.is_empty(),
        &format!("{} bundled scenarios byte-identical across runs", checked.len()),
    );
}

//! Flies into an acrylic wall, detects the impact and recovers, once with a
//! rigid airframe and once with a flexible one.
//!
//! cargo run --release --example wall_impact

use std::path::Path;

use quadcollide::dynamics::EventKind;
use quadcollide::io::load_scenario;
use quadcollide::{simulate, StepConfig};

fn main() -> quadcollide::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for name in ["flight_acrylic_rigid", "flight_acrylic_flexible"] {
        let scenario = load_scenario(&dir.join(format!("{name}.json")))?;
        let traj = simulate(&scenario, &StepConfig::default())?;
        let wall = &traj.frames[0];
        let peak = traj.samples.iter().map(|s| s.force.lambda_x).fold(0.0, f64::max);
        let closest = traj
            .samples
            .iter()
            .map(|s| wall.gap(&s.state.position))
            .fold(f64::INFINITY, f64::min);
        println!("{name}");
        for e in traj.events.iter().filter(|e| e.kind != EventKind::ModeSwitch) {
            println!("  t = {:6.3} s  {:?}", e.t, e.kind);
        }
        let end = traj.last().state.position;
        println!("  peak normal force {peak:.1} N, deepest gap {closest:.4} m");
        println!("  final position ({:.3}, {:.3}, {:.3})", end.x, end.y, end.z);
    }
    Ok(())
}

//! Plans a flight that bounces off a wooden wall and then an acrylic wall to
//! reach a goal, searching approach velocities and stiffness modes.
//!
//! cargo run --release --example plan_dual_collision -- [grid m/s] [h s]
//!
//! The full 0.1 m/s grid takes a while; 0.3 gives a quick look.

use std::path::Path;
use std::time::Instant;

use quadcollide::io::load_plan_query;
use quadcollide::planner::plan;
use quadcollide::StepConfig;

fn main() -> quadcollide::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>().ok());
    let grid = args.next().flatten().unwrap_or(0.3);
    let h = args.next().flatten().unwrap_or(1e-3);

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/dual_collision.json");
    let mut query = load_plan_query(&path)?;
    query.velocity_grid.resolution = grid;

    let start = Instant::now();
    let result = plan(&query, &StepConfig::with_h(h))?;
    let feasible: Vec<_> = result
        .all_scores
        .iter()
        .filter(|s| s.terminal_distance.is_finite())
        .collect();
    println!(
        "{} candidates, {} feasible, {:.1} s",
        result.all_scores.len(),
        feasible.len(),
        start.elapsed().as_secs_f64()
    );
    println!(
        "best: approach {:?}, modes {:?}, {:.3} m from goal",
        result.best.approach_velocity, result.best.mode_sequence, result.terminal_distance
    );

    let mut ranked = feasible;
    ranked.sort_by(|a, b| a.terminal_distance.total_cmp(&b.terminal_distance));
    for s in ranked.iter().take(5) {
        println!(
            "  {:?} {:?} {:.3}",
            s.candidate.approach_velocity[0], s.candidate.mode_sequence, s.terminal_distance
        );
    }
    Ok(())
}

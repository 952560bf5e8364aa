//! Recovers rigid-mode contact coefficients from a noisy synthetic drop trace
//! and checks them against a drop from a different height.
//!
//! cargo run --release --example identify_from_drop -- [noise]

use quadcollide::identification::{fit_contact_params, validate_params, ObservedTrajectory, ParamBounds};
use quadcollide::{drop_test_scenario, mode_params, simulate, Mode, StepConfig, Surface};

fn main() -> quadcollide::Result<()> {
    let noise: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.02);
    let cfg = StepConfig::default();
    let truth = mode_params(Mode::Rigid, Surface::Concrete);

    let scenario = drop_test_scenario(0.2, Mode::Rigid, Surface::Concrete)?;
    let traj = simulate(&scenario, &cfg)?;
    let observed = ObservedTrajectory::from_trajectory(&traj, 0, 10, "drop 0.2 m")
        .without_lateral()
        .with_velocity_noise(noise, 1);

    let bounds = ParamBounds::new([2000.0, 10000.0], [2.0, 30.0]);
    let fit = fit_contact_params(&observed, &scenario, &bounds, &cfg)?;
    println!("truth:  k = {:.1}, f = {:.3}", truth.k, truth.f);
    println!(
        "fitted: k = {:.1}, f = {:.3} ({} evaluations, rmse {:.2e} m)",
        fit.params.k, fit.params.f, fit.evaluations, fit.rmse_position
    );

    let held_out = drop_test_scenario(0.05, Mode::Rigid, Surface::Concrete)?;
    let held_traj = simulate(&held_out, &cfg)?;
    let held_obs = ObservedTrajectory::from_trajectory(&held_traj, 0, 10, "drop 0.05 m").without_lateral();
    let report = validate_params(&fit.params, &held_obs, &held_out, &cfg)?;
    for p in &report.peaks {
        println!(
            "  {:<18} sim {:>9.4} obs {:>9.4} accuracy {:5.1}%",
            p.channel,
            p.simulated,
            p.observed,
            100.0 * p.accuracy
        );
    }
    Ok(())
}

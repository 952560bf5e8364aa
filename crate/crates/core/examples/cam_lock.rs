//! Rod travel of the arm-lock cam over its quarter-turn range.
//!
//! cargo run --example cam_lock

use std::f64::consts::FRAC_PI_2;

use quadcollide::{cam_rod_extension, CamGeometry};

fn main() -> quadcollide::Result<()> {
    let cam = CamGeometry::new(0.02, 0.01)?;
    println!("{:>10} {:>14}", "theta [deg]", "extension [mm]");
    for i in 0..=6 {
        let theta = FRAC_PI_2 * i as f64 / 6.0;
        let x = cam_rod_extension(theta, &cam)?;
        println!("{:>10.1} {:>14.3}", theta.to_degrees(), 1e3 * x);
    }
    match cam_rod_extension(2.0, &cam) {
        Err(e) => println!("outside range: {e}"),
        Ok(x) => println!("unexpected extension {x}"),
    }
    Ok(())
}

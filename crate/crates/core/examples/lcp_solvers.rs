//! Solves one contact step with the closed-form scalar solver and with
//! Lemke's method, then a small coupled problem with Lemke alone.
//!
//! cargo run --example lcp_solvers

use nalgebra::{dmatrix, dvector};
use quadcollide::contact::solve_lcp_contact;
use quadcollide::frame::CfState;
use quadcollide::lcp::{solve_lcp_lemke, solve_lcp_scalar, LcpProblem, DEFAULT_MAX_PIVOTS};
use quadcollide::{assemble_contact_lcp, mode_params, Mode, Surface, VehicleParams};

fn main() -> quadcollide::Result<()> {
    let params = mode_params(Mode::Rigid, Surface::Concrete);
    let vehicle = VehicleParams::default();
    let h = 1e-4;
    // 2 mm into a floor, still closing at 1 m/s.
    let state = CfState {
        position: [-0.002, 0.0, 0.0].into(),
        velocity: [-1.0, 0.0, 0.0].into(),
    };
    let lcp = assemble_contact_lcp(&state, &params, vehicle.mass, 0.0, -vehicle.gravity, h)?;
    let problem = lcp.problem();
    let scalar = solve_lcp_scalar(&problem)?;
    let lemke = solve_lcp_lemke(&problem, DEFAULT_MAX_PIVOTS)?;
    println!("M = {:.6}, q = {:.4}", problem.m[(0, 0)], problem.q[0]);
    println!("scalar: lambda = {:.6}, w = {:.3e}", scalar.lambda, scalar.w);
    println!(
        "lemke:  lambda = {:.6}, w = {:.3e}, pivots {}",
        lemke.z[0], lemke.w[0], lemke.pivots
    );
    println!("normal force {:.2} N", solve_lcp_contact(&lcp)?.lambda);

    let coupled = LcpProblem::new(
        dmatrix![2.0, 1.0, 0.0; 1.0, 3.0, 1.0; 0.0, 1.0, 2.0],
        dvector![-1.0, 2.0, -3.0],
    )?;
    let sol = solve_lcp_lemke(&coupled, DEFAULT_MAX_PIVOTS)?;
    println!(
        "3x3: z = {:.4?}, w = {:.4?}, residual {:.1e}",
        sol.z.as_slice(),
        sol.w.as_slice(),
        coupled.residual(&sol.z)
    );
    Ok(())
}

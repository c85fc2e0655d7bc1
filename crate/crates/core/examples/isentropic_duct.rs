//! Isentropic flow in a duct with a single 1-shock, checked against a
//! Lax-Friedrichs time evolution run to steady state.
//!
//!     cargo run --example isentropic_duct

use fastsweep::cli::pipeline::{agreement_1d, EXCLUDE_CELLS};
use fastsweep::reference::{evolve_lf_1d, linear_init_1d, EvolveOptions};
use fastsweep::shock1d::{left_branch, solve_shock_on_branch};
use fastsweep::sweep1d::Grid1D;
use fastsweep::systems::{IsentropicDuct, Model1D};

fn main() -> fastsweep::Result<()> {
    let model = IsentropicDuct::single();
    let grid = Grid1D::new(0.0, 1.0, 257)?;
    let left = left_branch(&model, &[], &grid)?;
    let sol = solve_shock_on_branch(&model, &left, &[], (0.0, 1.0), None)?;
    let s = sol.shock.as_ref().unwrap();
    println!("shock at x = {:.5} (node {}), field {}", s.x_s, s.node, s.jump.field);
    println!("  U- = {:?}", s.jump.u_minus.as_slice());
    println!("  U+ = {:?}", s.jump.u_plus.as_slice());
    println!("  eigenvalues before {:?}, after {:?}", s.jump.lambda_minus, s.jump.lambda_plus);
    println!("  |f(U+) - f(U-)| = {:.1e}", s.jump.rh_residual);
    println!("rho(1) = {:.8}, right residuals {:?}", sol.state(grid.n - 1).unwrap()[0], sol.right_residuals);

    let init = linear_init_1d(&model, &grid);
    let (run, lf) = evolve_lf_1d(&model, &grid, &init, &EvolveOptions::default())?;
    println!("LF: {} steps, converged = {}, residual {:.2e}", run.steps, run.converged, run.final_residual());
    let a = agreement_1d(&model, &sol, &lf, EXCLUDE_CELLS as usize);
    println!(
        "scaled L1 difference {:.2e} = {:.2} h over {} nodes ({} near the shock left out)",
        a.l1,
        a.l1 / grid.h(),
        a.compared,
        a.excluded
    );
    println!("component scales {:?}", model.component_scales());
    Ok(())
}

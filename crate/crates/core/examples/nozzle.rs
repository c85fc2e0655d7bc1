//! Transonic nozzle: the left state has one free parameter, fixed by
//! requiring the sonic point to sit at the throat; the shock position is
//! then fixed by the exit pressure.
//!
//!     cargo run --example nozzle

use fastsweep::shock1d::{solve_nested, NestedOptions};
use fastsweep::sweep1d::Grid1D;
use fastsweep::systems::Nozzle;

fn main() -> fastsweep::Result<()> {
    let model = Nozzle::standard();
    let grid = Grid1D::for_model(&model, 1025)?;
    let t = std::time::Instant::now();
    let sol = solve_nested(&model, &grid, 0, &NestedOptions::default())?;
    println!("solved in {:.3} s", t.elapsed().as_secs_f64());
    for b in &sol.parameters.bindings {
        println!("  {} = {:.6} from {} at x = {} (residual {:.1e})", b.unknown, b.value, b.matching, b.location, b.residual);
    }
    for tp in sol.turning_points() {
        println!("  sonic point x_T = {:.5} in field {}", tp.x_t, tp.field);
    }
    let last = sol.state(grid.n - 1).unwrap();
    println!("  exit pressure {:.6}", model.pressure(last, grid.x_right));

    // lambda_1 = u - c through the nozzle: negative, sonic, positive, then
    // negative again past the shock.
    let trace = sol.eigenvalue_trace(&model);
    for (x, l) in trace.iter().step_by(trace.len() / 12) {
        println!("  x = {x:5.3}  u - c = {:+.4}", l[0]);
    }
    Ok(())
}

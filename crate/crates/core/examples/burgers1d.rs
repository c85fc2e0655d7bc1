//! Steady Burgers with a linear source: march from the left, jump, march
//! again, and bisect on the shock node until the right value is met.
//!
//!     cargo run --example burgers1d

use fastsweep::shock1d::solve_shock_location;
use fastsweep::sweep1d::Grid1D;
use fastsweep::systems::Scalar1D;

fn main() -> fastsweep::Result<()> {
    let model = Scalar1D::burgers_hj();
    println!("{:>6} {:>10} {:>12} {:>12}", "N", "x_s", "|x_s - 0.5|", "branch err");
    for n in [64, 128, 256, 512, 1024] {
        let grid = Grid1D::new(0.0, 1.0, n + 1)?;
        let sol = solve_shock_location(&model, &[], &grid, (0.0, 1.0))?;
        let shock = sol.shock.as_ref().unwrap();
        // Exact left branch: v = x/2 + 1.
        let err = (0..=shock.node)
            .map(|j| (sol.state(j).unwrap()[0] - Scalar1D::burgers_hj_left_exact(grid.x(j))).abs())
            .fold(0.0, f64::max);
        println!("{n:>6} {:>10.6} {:>12.2e} {err:>12.2e}", shock.x_s, (shock.x_s - 0.5).abs());
    }
    Ok(())
}

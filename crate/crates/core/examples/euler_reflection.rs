//! Regular shock reflection off a wall. The flow is supersonic in x
//! everywhere, so a single sweep from the inflow side gives the steady
//! state; the incident and reflected shocks show up as density jumps.
//!
//!     cargo run --release --example euler_reflection [m]

use fastsweep::cli::pipeline::{min_marching_eigenvalue, reflection_shocks};
use fastsweep::sweep2d::{sweep_system, Grid2D};
use fastsweep::systems::{Conservation2D, Euler2D, Side};

fn main() -> fastsweep::Result<()> {
    let m: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(257);
    let model = Euler2D::standard();
    let grid = Grid2D::new(model.domain(), m, m)?;
    let t = std::time::Instant::now();
    let field = sweep_system(&model, Side::Left, &grid)?;
    println!("{m}x{m} left sweep in {:.3} s", t.elapsed().as_secs_f64());
    println!("smallest u - c: {:.4}", min_marching_eigenvalue(&model, &field));
    let r = reflection_shocks(&field);
    println!(
        "incident: {} points, slope {:.4}; reflected: {} points, slope {:.4}; wall hit at x = {:.4}",
        r.incident.len(),
        r.incident_slope.unwrap_or(f64::NAN),
        r.reflected.len(),
        r.reflected_slope.unwrap_or(f64::NAN),
        r.wall_hit.unwrap_or(f64::NAN)
    );
    let worst = field
        .states
        .iter()
        .map(|w| (model.enthalpy(w) - model.enthalpy(&field.states[0])).abs())
        .fold(0.0, f64::max);
    println!("total enthalpy varies by at most {worst:.2e}");
    Ok(())
}

//! A compression fan that focuses into a shock. One sweep from the bottom
//! captures it; the result is compared with a Lax-Friedrichs evolution.
//!
//!     cargo run --example scalar2d

use fastsweep::cli::pipeline::{agreement_2d, scalar_l1_error, smooth_mask, EXCLUDE_CELLS};
use fastsweep::reference::{evolve_lf_2d, model_init_2d, EvolveOptions};
use fastsweep::sweep2d::{sweep_scalar, Grid2D};
use fastsweep::systems::{Scalar2D, Side};

fn main() -> fastsweep::Result<()> {
    let model = Scalar2D::scalar_shock();
    let grid = Grid2D::square(model.domain(), 97)?;
    let t = std::time::Instant::now();
    let field = sweep_scalar(&model, Side::Bottom, &grid)?;
    println!(
        "bottom sweep: {:.1} ms, {} of {} nodes valid, mean error {:.2e}",
        t.elapsed().as_secs_f64() * 1e3,
        field.valid_count(),
        grid.len(),
        scalar_l1_error(&model, &field).unwrap()
    );
    let t = std::time::Instant::now();
    let (run, lf) = evolve_lf_2d(&model, &grid, &model_init_2d(&model, &grid), &EvolveOptions::default())?;
    println!(
        "LF: {} steps in {:.2} s, converged = {}",
        run.steps,
        t.elapsed().as_secs_f64(),
        run.converged
    );
    let keep = smooth_mask(&field, &[], EXCLUDE_CELLS);
    let a = agreement_2d(&model, &field, &lf, &keep);
    println!("difference away from the shock: {:.2e} ({:.2} h)", a.l1, a.l1 / grid.h());
    Ok(())
}

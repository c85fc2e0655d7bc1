//! Building a scalar problem by hand: fluxes, boundary data and an optional
//! exact solution, then the same sweep/match pipeline as the built-ins.
//!
//!     cargo run --example custom_model

use fastsweep::match2d::match_branches;
use fastsweep::sweep2d::{sweep_scalar, Grid2D};
use fastsweep::systems::{Rect, Scalar2D, ScalarFlux, Side};

fn main() -> fastsweep::Result<()> {
    // u_x + (u^2/2)_y = 0: y is time-like for the Burgers part. Data
    // u = 1 on the bottom half of the left edge and -1 above it steepen
    // into a stationary shock along y = 1/2.
    let model = Scalar2D::new(
        "split",
        ScalarFlux::linear(),
        ScalarFlux::quadratic(0.5),
        Rect {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        },
    )
    .with_side(Side::Left, |_, y| if y < 0.5 { 1.0 } else { -1.0 })
    .with_side(Side::Bottom, |_, _| 1.0)
    .with_side(Side::Top, |_, _| -1.0)
    .with_exact(|_, y| if y < 0.5 { 1.0 } else { -1.0 });
    let grid = Grid2D::square(model.domain(), std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(65))?;
    let branches = vec![
        sweep_scalar(&model, Side::Bottom, &grid)?,
        sweep_scalar(&model, Side::Top, &grid)?,
    ];
    let merged = match_branches(&model, &branches)?;
    for c in &merged.curves {
        let ys: Vec<f64> = c.vertices.iter().map(|v| v.1).collect();
        let spread = ys.iter().cloned().fold(f64::MIN, f64::max) - ys.iter().cloned().fold(f64::MAX, f64::min);
        println!("curve with {} segments, y spread {spread:.2e}", c.segments.len());
    }
    let wrong = (0..grid.len()).filter(|&k| {
        let (i, j) = (k % grid.mx, k / grid.mx);
        merged.field.scalar(i, j) != model.exact(grid.x(i), grid.y(j))
    });
    println!("{} nodes differ from the exact solution", wrong.count());
    Ok(())
}

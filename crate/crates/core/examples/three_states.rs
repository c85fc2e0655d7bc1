//! Three boundary states meet in two shocks. Sweeps from the left, bottom
//! and right give three branches; shock curves are grown where branches
//! satisfy the jump condition and the branches are merged along them.
//!
//!     cargo run --example three_states [perturbed]

use fastsweep::match2d::match_branches;
use fastsweep::sweep2d::{sweep_scalar, Grid2D};
use fastsweep::systems::{Scalar2D, Side};

fn main() -> fastsweep::Result<()> {
    let perturbed = std::env::args().any(|a| a == "perturbed");
    let model = Scalar2D::three_states(1.2, 0.75, 0.5, perturbed);
    let grid = Grid2D::square(model.domain(), 129)?;
    let branches = [Side::Left, Side::Bottom, Side::Right]
        .into_iter()
        .map(|s| sweep_scalar(&model, s, &grid))
        .collect::<fastsweep::Result<Vec<_>>>()?;
    for b in &branches {
        println!("{:?} branch: {} of {} nodes valid", b.origin, b.valid_count(), grid.len());
    }
    let merged = match_branches(&model, &branches)?;
    for (k, c) in merged.curves.iter().enumerate() {
        let (a, b) = (c.vertices[0], c.vertices[c.vertices.len() - 1]);
        println!(
            "curve {k}: {} segments from ({:.3}, {:.3}) to ({:.3}, {:.3}), length {:.4}, max RH residual {:.1e}",
            c.segments.len(),
            a.0,
            a.1,
            b.0,
            b.1,
            c.length(),
            c.max_rh_residual()
        );
    }
    // A coarse picture of the merged field.
    for j in (0..grid.my).rev().step_by(8) {
        let row: String = (0..grid.mx)
            .step_by(4)
            .map(|i| match merged.field.scalar(i, j) {
                Some(u) if u > 0.1 => '+',
                Some(u) if u < -0.1 => '-',
                Some(_) => '0',
                None => ' ',
            })
            .collect();
        println!("  {row}");
    }
    Ok(())
}

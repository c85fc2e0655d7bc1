//! A duct whose area slope changes sign three times admits one shock per
//! sign region. Each sub-interval is searched separately.
//!
//!     cargo run --example duct_multi

use fastsweep::shock1d::{default_subdivision, solve_multi};
use fastsweep::sweep1d::Grid1D;
use fastsweep::systems::{IsentropicDuct, Model1D};

fn main() -> fastsweep::Result<()> {
    let model = IsentropicDuct::multi();
    let grid = Grid1D::new(0.0, 1.0, 513)?;
    let cuts = default_subdivision(&model);
    println!("A'(x) vanishes at {:?}", model.source_switch_points());
    println!("searching intervals split at {cuts:.4?}");
    let sols = solve_multi(&model, &grid, &cuts)?;
    println!("{} admissible solutions", sols.len());
    for (k, s) in sols.iter().enumerate() {
        let sh = s.shock.as_ref().unwrap();
        println!(
            "  #{k}: x_s = {:.4}  rho {:.4} -> {:.4}  RH {:.1e}  entropy {}",
            sh.x_s, sh.jump.u_minus[0], sh.jump.u_plus[0], sh.jump.rh_residual, sh.jump.entropy_ok
        );
    }
    Ok(())
}

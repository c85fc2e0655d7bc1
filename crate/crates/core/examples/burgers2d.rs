//! 2D Burgers with a manufactured source. Both fluxes are the same, so the
//! jump normal is undetermined wherever [[f]] = [[g]] = 0 and the curve is
//! grown by the zero-flux-jump rule instead.
//!
//!     RUST_LOG=info cargo run --example burgers2d

use fastsweep::cli::study::study_convergence;
use fastsweep::cli::RunConfig;

fn main() -> fastsweep::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut config = RunConfig::new("burgers2d");
    config.sizes = vec![33, 65, 129, 257];
    let table = study_convergence(&config)?;
    print!("{}", table.csv());
    println!("observed orders {:.3?}", table.orders());
    Ok(())
}

//! Sweep time against grid size. Doubling the resolution in 2D should
//! roughly quadruple the time: the log-log slope against node count is
//! close to one.
//!
//!     cargo run --release --example scaling [problem]

use fastsweep::cli::study::study_scaling;
use fastsweep::cli::RunConfig;

fn main() -> fastsweep::Result<()> {
    let problem = std::env::args().nth(1).unwrap_or_else(|| "burgers2d".into());
    let mut config = RunConfig::new(&problem);
    config.sizes = if problem.contains("2d") || problem.starts_with("three") {
        vec![65, 129, 257, 513]
    } else {
        vec![513, 1025, 2049, 4097, 8193]
    };
    let table = study_scaling(&config)?;
    print!("{}", table.csv());
    match (table.slope, &table.failure) {
        (_, Some(e)) => println!("stopped early: {e}"),
        (Some(s), None) => println!("slope {s:.3}"),
        _ => {}
    }
    Ok(())
}

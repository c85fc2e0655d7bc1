//! Driving a run from a JSON configuration, as the `fastsweep run --config`
//! command does, and reading back the report.
//!
//!     cargo run --example run_config [out_dir]

use fastsweep::cli::{run, RunConfig};

fn main() -> fastsweep::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("fastsweep_nozzle").display().to_string());
    let config = RunConfig::from_json(&format!(
        r#"{{
            "problem": "nozzle",
            "params": {{ "p_right": 0.7 }},
            "grid": [513],
            "solver": "both",
            "out": {out:?}
        }}"#
    ))?;
    let result = run(&config)?;
    let r = &result.report;
    println!("wrote {:?} to {out}", r.files);
    println!("timings {:?}", r.timings);
    if let Some(a) = &r.comparison {
        println!("sweep vs LF: mean scaled difference {:.2e}, max {:.2e}", a.l1, a.max);
    }
    println!("{}", serde_json::to_string_pretty(&r.diagnostics).unwrap());
    Ok(())
}

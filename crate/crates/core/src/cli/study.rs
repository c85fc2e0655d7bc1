//! Timing and grid-convergence studies.

use std::fmt::Write as _;

use serde::Serialize;

use super::pipeline::{self, Solution};
use super::RunConfig;
use crate::error::{Error, Result};
use crate::match2d::ShockCurve;
use crate::systems::Problem;

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub size: usize,
    /// Total grid nodes.
    pub nodes: usize,
    /// Minimum sweep time over the repetitions, in seconds.
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingTable {
    pub problem: String,
    pub rows: Vec<ScalingRow>,
    /// Fitted slope of log time against log nodes.
    pub slope: Option<f64>,
    #[serde(serialize_with = "ser_failure")]
    pub failure: Option<Error>,
}

fn ser_failure<S: serde::Serializer>(e: &Option<Error>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match e {
        Some(e) => s.serialize_some(&super::error_json(e)),
        None => s.serialize_none(),
    }
}

impl ScalingTable {
    pub fn csv(&self) -> String {
        let mut s = String::from("size,nodes,seconds\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:e}", r.size, r.nodes, r.seconds);
        }
        s
    }
}

fn check_sizes(sizes: &[usize], min: usize) -> Result<()> {
    if sizes.len() < min {
        return Err(Error::Config(format!("a study needs at least {min} sizes, got {}", sizes.len())));
    }
    if sizes.iter().any(|s| *s < super::MIN_GRID) {
        return Err(Error::Config(format!("study sizes must be at least {}", super::MIN_GRID)));
    }
    Ok(())
}

fn nodes(problem: &Problem, size: usize) -> usize {
    if problem.dimension() == 1 {
        size
    } else {
        size * size
    }
}

/// Log-log slope of sweep time against node count. Sizes must form a
/// geometric progression of at least four grids.
pub fn study_scaling(config: &RunConfig) -> Result<ScalingTable> {
    let problem = config.problem()?;
    let sizes = &config.sizes;
    check_sizes(sizes, 4)?;
    let ratio = sizes[1] as f64 / sizes[0] as f64;
    let geometric = ratio > 1.0
        && sizes
            .windows(2)
            .all(|w| ((w[1] as f64 / w[0] as f64) / ratio - 1.0).abs() < 0.05);
    if !geometric {
        return Err(Error::Config(format!("sizes {sizes:?} are not a geometric progression")));
    }
    let mut table = ScalingTable {
        problem: config.problem.clone(),
        rows: Vec::new(),
        slope: None,
        failure: None,
    };
    let opts = config.sweep_options();
    for &size in sizes {
        let mut best = f64::INFINITY;
        for _ in 0..config.repeats.max(1) {
            match pipeline::sweep(&problem, &[size], &opts) {
                Ok(o) => best = best.min(o.timings.sweep_total()),
                Err(e) => {
                    table.failure = Some(e);
                    return Ok(table);
                }
            }
        }
        table.rows.push(ScalingRow {
            size,
            nodes: nodes(&problem, size),
            seconds: best,
        });
    }
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .map(|r| ((r.nodes as f64).ln(), r.seconds.ln()))
        .collect();
    table.slope = pipeline::fit_line(&pts).map(|f| f.1);
    Ok(table)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub size: usize,
    pub h: f64,
    /// Mean absolute error over valid nodes (times the length in 1D).
    pub l1: f64,
    /// Largest nodal error of the branch ahead of the shock (1D).
    pub branch_linf: Option<f64>,
    /// Shock position error: distance in 1D, Hausdorff distance in 2D.
    pub shock_error: Option<f64>,
    /// Observed order of `l1` relative to the previous row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub problem: String,
    pub rows: Vec<ConvergenceRow>,
    #[serde(serialize_with = "ser_failure")]
    pub failure: Option<Error>,
}

impl ConvergenceTable {
    pub fn csv(&self) -> String {
        let mut s = String::from("size,h,l1,branch_linf,shock_error,order\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{},{},{}",
                r.size,
                r.h,
                r.l1,
                opt(r.branch_linf),
                opt(r.shock_error),
                opt(r.order)
            );
        }
        s
    }

    /// Orders of consecutive `l1` errors.
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }
}

fn has_exact(problem: &Problem) -> bool {
    match problem {
        Problem::Scalar2D(m) => m.has_exact(),
        p => pipeline::exact_1d(p.id()).is_some(),
    }
}

fn convergence_row(problem: &Problem, size: usize, outcome: &Solution) -> Result<ConvergenceRow> {
    match outcome {
        Solution::OneD { grid, solutions } => {
            let (exact, xs) = pipeline::exact_1d(problem.id()).expect("checked");
            let sol = solutions.first().ok_or(Error::NoShockPossible)?;
            let mut l1 = 0.0;
            let mut linf = 0.0_f64;
            let js = sol.shock.as_ref().map_or(grid.n, |s| s.node);
            for j in 0..grid.n {
                let x = grid.x(j);
                let u = sol.state(j).map_or(f64::NAN, |u| u[0]);
                l1 += (u - exact(x)).abs() * grid.h();
                if j <= js && x < xs {
                    linf = linf.max((u - exact(x)).abs());
                }
            }
            Ok(ConvergenceRow {
                size,
                h: grid.h(),
                l1,
                branch_linf: Some(linf),
                shock_error: sol.parameters.x_s.map(|x| (x - xs).abs()),
                order: None,
            })
        }
        Solution::Scalar2D { merged, .. } => {
            let Problem::Scalar2D(m) = problem else {
                unreachable!()
            };
            let l1 = pipeline::scalar_l1_error(m, &merged.field).ok_or_else(|| Error::Config("no exact solution".into()))?;
            let shock_error = pipeline::exact_curves(problem.id()).map(|exact| {
                merged
                    .curves
                    .iter()
                    .zip(exact)
                    .map(|(c, e): (&ShockCurve, Vec<_>)| c.hausdorff(&e))
                    .fold(0.0, f64::max)
            });
            Ok(ConvergenceRow {
                size,
                h: merged.field.grid.h(),
                l1,
                branch_linf: None,
                shock_error,
                order: None,
            })
        }
        Solution::System2D { .. } => Err(Error::Config("no exact solution".into())),
    }
}

/// Errors against the registered exact solution over the configured sizes.
pub fn study_convergence(config: &RunConfig) -> Result<ConvergenceTable> {
    let problem = config.problem()?;
    check_sizes(&config.sizes, 2)?;
    if !has_exact(&problem) {
        return Err(Error::Config(format!("{} has no exact solution registered", config.problem)));
    }
    let mut table = ConvergenceTable {
        problem: config.problem.clone(),
        rows: Vec::new(),
        failure: None,
    };
    let opts = config.sweep_options();
    for &size in &config.sizes {
        let row = pipeline::sweep(&problem, &[size], &opts).and_then(|o| convergence_row(&problem, size, &o.solution));
        match row {
            Ok(mut r) => {
                if let Some(p) = table.rows.last() {
                    if p.l1 > 0.0 && r.l1 > 0.0 {
                        r.order = Some((p.l1 / r.l1).ln() / (p.h / r.h).ln());
                    }
                }
                table.rows.push(r);
            }
            Err(e) => {
                table.failure = Some(e);
                break;
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_preconditions() {
        let mut c = RunConfig::new("burgers1d_hj");
        c.sizes = vec![64];
        assert_eq!(study_scaling(&c).unwrap_err().exit_code(), 2);
        c.sizes = vec![64, 128, 200, 512];
        assert_eq!(study_scaling(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn convergence_needs_exact() {
        let mut c = RunConfig::new("isentropic_duct");
        c.sizes = vec![65, 129];
        assert_eq!(study_convergence(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn burgers_first_order() {
        let mut c = RunConfig::new("burgers1d_hj");
        c.sizes = vec![65, 129, 257];
        let t = study_convergence(&c).unwrap();
        assert!(t.failure.is_none());
        for o in t.orders() {
            assert!((0.7..1.5).contains(&o), "{o}");
        }
        for r in &t.rows {
            assert!(r.shock_error.unwrap() <= r.h);
        }
    }

    #[test]
    fn three_states_exact_away_from_curves() {
        let mut c = RunConfig::new("three_states");
        c.sizes = vec![33, 65];
        let t = study_convergence(&c).unwrap();
        // Straight curves split the grid exactly between constant states.
        assert!(t.rows.iter().all(|r| r.l1 == 0.0));
    }
}

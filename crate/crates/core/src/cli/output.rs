//! CSV and JSON writers for solutions, curves and reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::match2d::ShockCurve;
use crate::reference::EvolutionRun;
use crate::shock1d::SteadySolution1D;
use crate::sweep1d::Grid1D;
use crate::sweep2d::Field2D;
use crate::systems::{Model1D, StateVector};

fn header(cols: &[&str], size: usize) -> String {
    let mut h = cols.join(",");
    for c in 0..size {
        let _ = write!(h, ",u{c}");
    }
    h.push('\n');
    h
}

fn push_state(s: &mut String, u: Option<&StateVector>, size: usize) {
    for c in 0..size {
        match u {
            Some(u) => {
                let _ = write!(s, ",{:.17e}", u[c]);
            }
            None => s.push_str(",nan"),
        }
    }
    s.push('\n');
}

pub fn field_1d_csv(grid: &Grid1D, size: usize, state: impl Fn(usize) -> Option<StateVector>) -> String {
    let mut s = header(&["x"], size);
    for j in 0..grid.n {
        let _ = write!(s, "{:.17e}", grid.x(j));
        push_state(&mut s, state(j).as_ref(), size);
    }
    s
}

/// Row-major by `y` then `x`; masked nodes keep their stored value.
pub fn field_2d_csv(field: &Field2D) -> String {
    let g = field.grid;
    let size = field.states.first().map_or(0, |u| u.len());
    let mut s = header(&["x", "y"], size);
    for j in 0..g.my {
        for i in 0..g.mx {
            let _ = write!(s, "{:.17e},{:.17e}", g.x(i), g.y(j));
            push_state(&mut s, Some(field.raw(i, j)), size);
        }
    }
    s
}

pub fn eigen_trace_csv(model: &dyn Model1D, sol: &SteadySolution1D) -> String {
    let mut s = String::from("x");
    for c in 0..model.size() {
        let _ = write!(s, ",lambda{c}");
    }
    s.push('\n');
    for (x, l) in sol.eigenvalue_trace(model) {
        let _ = write!(s, "{x:.17e}");
        for v in l {
            let _ = write!(s, ",{v:.17e}");
        }
        s.push('\n');
    }
    s
}

pub fn shocks_1d_csv(solutions: &[SteadySolution1D]) -> String {
    let mut s = String::from("solution,x_s,node,field,rh_residual,entropy_ok\n");
    for (k, sol) in solutions.iter().enumerate() {
        if let Some(sh) = &sol.shock {
            let _ = writeln!(
                s,
                "{k},{:.17e},{},{},{:e},{}",
                sh.x_s, sh.node, sh.jump.field, sh.jump.rh_residual, sh.jump.entropy_ok
            );
        }
    }
    s
}

/// One row per vertex; segment diagnostics sit on the segment's first
/// vertex and are empty on the last.
pub fn curves_csv(curves: &[ShockCurve]) -> String {
    let mut s = String::from(
        "curve,vertex,x,y,nx,ny,rh_residual,rh_midpoint,entropy_minus,entropy_plus,degenerate\n",
    );
    for (c, curve) in curves.iter().enumerate() {
        for (k, v) in curve.vertices.iter().enumerate() {
            let _ = write!(s, "{c},{k},{:.17e},{:.17e}", v.0, v.1);
            match curve.segments.get(k) {
                Some(seg) => {
                    let _ = writeln!(
                        s,
                        ",{:.17e},{:.17e},{:e},{:e},{:e},{:e},{}",
                        seg.normal.0,
                        seg.normal.1,
                        seg.rh_residual,
                        seg.rh_midpoint,
                        seg.entropy_minus,
                        seg.entropy_plus,
                        seg.degenerate
                    );
                }
                None => s.push_str(",,,,,,,\n"),
            }
        }
    }
    s
}

pub fn history_csv(run: &EvolutionRun) -> String {
    run.history_csv()
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))
}

pub fn write(dir: &Path, name: &str, contents: &str, manifest: &mut Vec<String>) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    manifest.push(name.to_string());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep2d::Grid2D;
    use crate::systems::{Rect, Side};
    use nalgebra::dvector;

    #[test]
    fn field_rows_and_order() {
        let g = Grid2D::new(
            Rect {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 2.0,
            },
            3,
            4,
        )
        .unwrap();
        let mut f = Field2D::constant(g, dvector![1.0, 2.0], Side::Left);
        f.states[g.idx(2, 0)] = dvector![5.0, 6.0];
        let csv = field_2d_csv(&f);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,u0,u1");
        assert_eq!(lines.len(), 1 + 12);
        // x varies fastest.
        assert!(lines[3].starts_with("1.00000000000000000e0,0.00000000000000000e0,5"));
    }

    #[test]
    fn missing_states_are_nan() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        let csv = field_1d_csv(&g, 1, |j| (j != 1).then(|| dvector![j as f64]));
        assert_eq!(csv.lines().nth(2).unwrap(), "5.00000000000000000e-1,nan");
    }
}

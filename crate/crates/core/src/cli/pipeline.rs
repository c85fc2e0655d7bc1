//! Solver dispatch for the catalogue problems and the diagnostics computed
//! on their results.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::match2d::{self, MergedSolution2D, Point};
use crate::shock1d::{self, NestedOptions, SteadySolution1D};
use crate::sweep1d::Grid1D;
use crate::sweep2d::{self, Field2D, Grid2D};
use crate::systems::{Conservation2D, Euler2D, Model1D, Problem, Scalar2D, Side, StateVector};

/// Nodes this many cells from a shock are left out of cross-checks.
pub const EXCLUDE_CELLS: f64 = 5.0;
/// A run of transverse differences counts as a jump when each exceeds this
/// fraction of the field's largest difference.
pub const LOCUS_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Timings {
    pub branches: f64,
    pub shock: f64,
    pub matching: f64,
    pub evolve: f64,
    pub io: f64,
}

impl Timings {
    /// Solve time, excluding evolution and I/O.
    pub fn sweep_total(&self) -> f64 {
        self.branches + self.shock + self.matching
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub alpha_brackets: Option<Vec<(f64, f64)>>,
    /// Restrict the shock search to this interval (1D, no parameters).
    pub shock_bracket: Option<(f64, f64)>,
    /// Field of the shock for nested solves; defaults to the last one the
    /// right conditions can pin down.
    pub shock_field: Option<usize>,
    /// Sweep origins for 2D problems, in merge order.
    pub sides: Option<Vec<Side>>,
}

#[derive(Debug, Clone)]
pub enum Solution {
    OneD {
        grid: Grid1D,
        solutions: Vec<SteadySolution1D>,
    },
    Scalar2D {
        branches: Vec<Field2D>,
        merged: MergedSolution2D,
    },
    System2D {
        field: Field2D,
    },
}

impl Solution {
    /// The field that is written out and compared.
    pub fn field2d(&self) -> Option<&Field2D> {
        match self {
            Solution::Scalar2D { merged, .. } => Some(&merged.field),
            Solution::System2D { field } => Some(field),
            Solution::OneD { .. } => None,
        }
    }

    pub fn curves(&self) -> &[match2d::ShockCurve] {
        match self {
            Solution::Scalar2D { merged, .. } => &merged.curves,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub solution: Solution,
    pub timings: Timings,
}

pub fn grid_1d(model: &dyn Model1D, sizes: &[usize]) -> Result<Grid1D> {
    match sizes {
        [n] => Grid1D::for_model(model, *n),
        _ => Err(Error::Config(format!("a 1D grid takes one size, got {sizes:?}"))),
    }
}

pub fn grid_2d(domain: crate::systems::Rect, sizes: &[usize]) -> Result<Grid2D> {
    match sizes {
        [m] => Grid2D::new(domain, *m, *m),
        [mx, my] => Grid2D::new(domain, *mx, *my),
        _ => Err(Error::Config(format!("a 2D grid takes one or two sizes, got {sizes:?}"))),
    }
}

/// Sweep origins of the built-in scalar problems, in merge order.
pub fn default_sides(id: &str) -> Option<Vec<Side>> {
    match id {
        "three_states" | "three_states_perturbed" => Some(vec![Side::Left, Side::Bottom, Side::Right]),
        "burgers2d" => Some(vec![Side::Bottom, Side::Top]),
        "scalar2d" => Some(vec![Side::Bottom]),
        "euler2d_reflection" => Some(vec![Side::Left]),
        _ => None,
    }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64().max(1e-9)
}

pub fn sweep(problem: &Problem, sizes: &[usize], opts: &SweepOptions) -> Result<SweepOutcome> {
    let mut timings = Timings::default();
    if let Some(model) = problem.as_1d() {
        let grid = grid_1d(model, sizes)?;
        let b = model.boundary();
        let solutions = if b.left.free_parameters() > 0 {
            let k = opts.shock_field.unwrap_or(b.right.len().max(1) - 1);
            let t = Instant::now();
            let s = shock1d::solve_nested(
                model,
                &grid,
                k,
                &NestedOptions {
                    alpha_brackets: opts.alpha_brackets.clone(),
                    alpha_tol: None,
                },
            )?;
            timings.shock = secs(t);
            vec![s]
        } else {
            let t = Instant::now();
            let left = shock1d::left_branch(model, &[], &grid)?;
            timings.branches = secs(t);
            let t = Instant::now();
            let sols = match opts.shock_bracket {
                Some(br) => vec![shock1d::solve_shock_on_branch(model, &left, &[], br, None)?],
                None => shock1d::solve_multi_on_branch(model, &left, &shock1d::default_subdivision(model)),
            };
            timings.shock = secs(t);
            if sols.is_empty() {
                return Err(Error::NoSolutionInBracket {
                    lo: grid.x_left,
                    hi: grid.x_right,
                });
            }
            sols
        };
        return Ok(SweepOutcome {
            solution: Solution::OneD { grid, solutions },
            timings,
        });
    }
    let sides = match &opts.sides {
        Some(s) => s.clone(),
        None => default_sides(problem.id())
            .ok_or_else(|| Error::Config(format!("no sweep plan for {}", problem.id())))?,
    };
    if sides.is_empty() {
        return Err(Error::Config("at least one sweep side is needed".into()));
    }
    match problem {
        Problem::Scalar2D(m) => {
            let grid = grid_2d(m.domain(), sizes)?;
            let t = Instant::now();
            let branches = sides
                .iter()
                .map(|s| sweep2d::sweep_scalar(m, *s, &grid))
                .collect::<Result<Vec<_>>>()?;
            timings.branches = secs(t);
            let t = Instant::now();
            let merged = match2d::match_branches(m, &branches)?;
            timings.matching = secs(t);
            Ok(SweepOutcome {
                solution: Solution::Scalar2D { branches, merged },
                timings,
            })
        }
        Problem::Euler2D(e) => {
            if sides.len() != 1 {
                return Err(Error::Config("system problems are swept from a single side".into()));
            }
            let grid = grid_2d(e.domain(), sizes)?;
            let t = Instant::now();
            let field = sweep2d::sweep_system(e, sides[0], &grid)?;
            timings.branches = secs(t);
            if !field.fully_valid() {
                return Err(Error::Coverage {
                    nodes: masked_nodes(&field),
                });
            }
            Ok(SweepOutcome {
                solution: Solution::System2D { field },
                timings,
            })
        }
        _ => unreachable!("1D problems handled above"),
    }
}

fn masked_nodes(f: &Field2D) -> Vec<(usize, usize)> {
    (0..f.grid.len())
        .filter(|&k| f.mask[k].is_some())
        .map(|k| (k % f.grid.mx, k / f.grid.mx))
        .collect()
}

/// Closed-form steady solution of a 1D problem and its shock location.
pub fn exact_1d(id: &str) -> Option<(fn(f64) -> f64, f64)> {
    fn burgers(x: f64) -> f64 {
        if x < 0.5 {
            x / 2.0 + 1.0
        } else {
            x / 2.0 - 1.5
        }
    }
    (id == "burgers1d_hj").then_some((burgers as fn(f64) -> f64, 0.5))
}

/// Exact shock curves of a 2D problem, sampled as polylines.
pub fn exact_curves(id: &str) -> Option<Vec<Vec<Point>>> {
    match id {
        "burgers2d" => Some(vec![(0..=400)
            .map(|k| k as f64 / 400.0)
            .map(|x| (x, crate::systems::burgers_phi(x)))
            .collect()]),
        _ => None,
    }
}

/// A jump in one component between neighbouring nodes along a grid line.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JumpLocus {
    pub x: f64,
    pub y: f64,
    /// Total change across the run, in the positive coordinate direction.
    pub jump: f64,
    /// `true` when found scanning along `y` (one per column).
    pub along_y: bool,
}

/// Jumps in `component` along every grid line: maximal runs of
/// same-signed differences above `LOCUS_THRESHOLD` times the field's
/// largest difference, reported at their difference-weighted centre.
pub fn jump_loci(field: &Field2D, component: usize) -> Vec<JumpLocus> {
    let g = field.grid;
    let val = |i: usize, j: usize| field.get(i, j).map(|u| u[component]);
    // Thresholds are per direction: a shock nearly aligned with one axis
    // jumps in a single cell along the other.
    let (mut dx, mut dy) = (0.0_f64, 0.0_f64);
    for j in 0..g.my {
        for i in 0..g.mx {
            if let Some(v) = val(i, j) {
                if let Some(e) = (i + 1 < g.mx).then(|| val(i + 1, j)).flatten() {
                    dx = dx.max((e - v).abs());
                }
                if let Some(n) = (j + 1 < g.my).then(|| val(i, j + 1)).flatten() {
                    dy = dy.max((n - v).abs());
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut scan = |line: Vec<(f64, f64, Option<f64>)>, along_y: bool| {
        // (x, y, value) along the line.
        let dmax = if along_y { dy } else { dx };
        if dmax == 0.0 {
            return;
        }
        let thr = LOCUS_THRESHOLD * dmax;
        let mut run: Vec<(f64, f64, f64)> = Vec::new();
        let mut flush = |run: &mut Vec<(f64, f64, f64)>| {
            if !run.is_empty() {
                let w: f64 = run.iter().map(|r| r.2.abs()).sum();
                let jump: f64 = run.iter().map(|r| r.2).sum();
                let x = run.iter().map(|r| r.0 * r.2.abs()).sum::<f64>() / w;
                let y = run.iter().map(|r| r.1 * r.2.abs()).sum::<f64>() / w;
                out.push(JumpLocus { x, y, jump, along_y });
                run.clear();
            }
        };
        for w in line.windows(2) {
            match (w[0].2, w[1].2) {
                (Some(a), Some(b)) if (b - a).abs() >= thr => {
                    let d = b - a;
                    if run.last().is_some_and(|r| r.2.signum() != d.signum()) {
                        flush(&mut run);
                    }
                    run.push((0.5 * (w[0].0 + w[1].0), 0.5 * (w[0].1 + w[1].1), d));
                }
                _ => flush(&mut run),
            }
        }
        flush(&mut run);
    };
    for i in 0..g.mx {
        scan((0..g.my).map(|j| (g.x(i), g.y(j), val(i, j))).collect(), true);
    }
    for j in 0..g.my {
        scan((0..g.mx).map(|i| (g.x(i), g.y(j), val(i, j))).collect(), false);
    }
    out
}

/// Least-squares line `y = a + b x`.
pub fn fit_line(pts: &[Point]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| {
        let b = sxy / sxx;
        (my - b * mx, b)
    })
}

/// Incident and reflected shocks of the wall-reflection problem, found as
/// density jumps along columns: density rises across the incident shock
/// going up and falls across the reflected one.
#[derive(Debug, Clone, Serialize)]
pub struct ReflectionShocks {
    pub incident: Vec<Point>,
    pub reflected: Vec<Point>,
    pub incident_slope: Option<f64>,
    pub reflected_slope: Option<f64>,
    /// Where the fitted incident shock meets the wall `y = y0`.
    pub wall_hit: Option<f64>,
}

pub fn reflection_shocks(field: &Field2D) -> ReflectionShocks {
    let loci: Vec<JumpLocus> = jump_loci(field, 0).into_iter().filter(|l| l.along_y).collect();
    let incident: Vec<Point> = loci.iter().filter(|l| l.jump > 0.0).map(|l| (l.x, l.y)).collect();
    let reflected: Vec<Point> = loci.iter().filter(|l| l.jump < 0.0).map(|l| (l.x, l.y)).collect();
    let fi = fit_line(&incident);
    let fr = fit_line(&reflected);
    let y0 = field.grid.rect.y0;
    ReflectionShocks {
        incident_slope: fi.map(|f| f.1),
        reflected_slope: fr.map(|f| f.1),
        wall_hit: fi.filter(|f| f.1 != 0.0).map(|(a, b)| (y0 - a) / b),
        incident,
        reflected,
    }
}

/// Nodes far from every curve and every detected jump.
pub fn smooth_mask(field: &Field2D, curves: &[match2d::ShockCurve], cells: f64) -> Vec<bool> {
    let g = field.grid;
    let h = g.hx().max(g.hy());
    let loci = jump_loci(field, 0);
    let mut keep = vec![true; g.len()];
    for j in 0..g.my {
        for i in 0..g.mx {
            let p = (g.x(i), g.y(j));
            let near_curve = curves.iter().any(|c| c.distance(p) <= cells * h);
            let near_jump = loci.iter().any(|l| {
                if l.along_y {
                    (l.x - p.0).abs() < 0.5 * g.hx() && (l.y - p.1).abs() <= cells * g.hy()
                } else {
                    (l.y - p.1).abs() < 0.5 * g.hy() && (l.x - p.0).abs() <= cells * g.hx()
                }
            });
            keep[g.idx(i, j)] = !(near_curve || near_jump);
        }
    }
    keep
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Agreement {
    /// Mean over the compared region of `sum_c |a_c - b_c| / scale_c`.
    pub l1: f64,
    pub max: f64,
    pub compared: usize,
    pub excluded: usize,
}

fn scaled_diff(a: &StateVector, b: &StateVector, scales: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .zip(scales)
        .map(|((x, y), s)| (x - y).abs() / s.abs().max(1e-300))
        .sum()
}

/// Agreement of a 1D sweep solution with another field on the same grid,
/// leaving out `cells` cells either side of the shock.
pub fn agreement_1d(model: &dyn Model1D, sol: &SteadySolution1D, other: &[StateVector], cells: usize) -> Agreement {
    let g = sol.grid;
    let scales = model.component_scales();
    let js = sol.shock.as_ref().map(|s| s.node);
    let (mut sum, mut max, mut n, mut ex) = (0.0, 0.0_f64, 0, 0);
    for j in 0..g.n {
        let near = js.is_some_and(|s| j.abs_diff(s) <= cells);
        match (sol.state(j), near) {
            (Some(u), false) => {
                let d = scaled_diff(u, &other[j], &scales);
                sum += d;
                max = max.max(d);
                n += 1;
            }
            _ => ex += 1,
        }
    }
    Agreement {
        l1: sum / n.max(1) as f64,
        max,
        compared: n,
        excluded: ex,
    }
}

pub fn agreement_2d(model: &dyn Conservation2D, a: &Field2D, b: &Field2D, keep: &[bool]) -> Agreement {
    let scales = model.component_scales();
    let (mut sum, mut max, mut n, mut ex) = (0.0, 0.0_f64, 0, 0);
    for k in 0..a.grid.len() {
        if keep[k] && a.mask[k].is_none() && b.mask[k].is_none() {
            let d = scaled_diff(&a.states[k], &b.states[k], &scales);
            sum += d;
            max = max.max(d);
            n += 1;
        } else {
            ex += 1;
        }
    }
    Agreement {
        l1: sum / n.max(1) as f64,
        max,
        compared: n,
        excluded: ex,
    }
}

/// Mean `|steady residual|` of the centred conservation form over kept
/// interior nodes, scaled per component.
pub fn mean_steady_residual(model: &dyn Conservation2D, field: &Field2D, keep: &[bool]) -> f64 {
    let g = field.grid;
    let scales = model.component_scales();
    let (mut sum, mut n) = (0.0, 0usize);
    for j in 1..g.my - 1 {
        for i in 1..g.mx - 1 {
            if !keep[g.idx(i, j)] {
                continue;
            }
            if let Some(r) = sweep2d::steady_residual(model, field, i, j) {
                sum += r.iter().zip(&scales).map(|(v, s)| v.abs() / s).sum::<f64>();
                n += 1;
            }
        }
    }
    sum / n.max(1) as f64
}

/// Mean `|u - exact|` over valid nodes of a scalar field.
pub fn scalar_l1_error(model: &Scalar2D, field: &Field2D) -> Option<f64> {
    let g = field.grid;
    let (mut sum, mut n) = (0.0, 0usize);
    for j in 0..g.my {
        for i in 0..g.mx {
            if let Some(u) = field.scalar(i, j) {
                sum += (u - model.exact(g.x(i), g.y(j))?).abs();
                n += 1;
            }
        }
    }
    Some(sum / n.max(1) as f64)
}

/// Smallest eigenvalue of the `x` flux Jacobian over the field.
pub fn min_marching_eigenvalue(model: &Euler2D, field: &Field2D) -> f64 {
    use crate::systems::System2D;
    field
        .states
        .iter()
        .filter_map(|w| model.eigen_f(w).ok())
        .map(|e| e.values.iter().copied().fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min)
}

fn json_state(u: &StateVector) -> Value {
    json!(u.as_slice())
}

/// Machine-readable summary of a sweep result.
pub fn diagnostics(problem: &Problem, solution: &Solution) -> Value {
    match (problem, solution) {
        (_, Solution::OneD { grid, solutions }) => {
            let model = problem.as_1d().expect("1D problem");
            let sols: Vec<Value> = solutions
                .iter()
                .map(|s| {
                    json!({
                        "x_s": s.parameters.x_s,
                        "alphas": s.parameters.alphas,
                        "bindings": s.parameters.bindings,
                        "shock": s.shock.as_ref().map(|sh| json!({
                            "node": sh.node,
                            "x_s": sh.x_s,
                            "field": sh.jump.field,
                            "rh_residual": sh.jump.rh_residual,
                            "entropy_ok": sh.jump.entropy_ok,
                            "u_minus": json_state(&sh.jump.u_minus),
                            "u_plus": json_state(&sh.jump.u_plus),
                            "lambda_minus": sh.jump.lambda_minus,
                            "lambda_plus": sh.jump.lambda_plus,
                        })),
                        "right_residuals": s.right_residuals,
                        "bc_tol": s.bc_tol,
                        "satisfies_right_bc": s.satisfies_right_bc(),
                        "turning_points": s.turning_points(),
                        "right_state": s.state(grid.n - 1).map(json_state),
                        "exit_pressure": match problem {
                            Problem::Nozzle(nz) => s.state(grid.n - 1).map(|u| nz.pressure(u, grid.x_right)),
                            _ => None,
                        },
                    })
                })
                .collect();
            json!({
                "model": model.id(),
                "nodes": grid.n,
                "h": grid.h(),
                "solutions": sols,
            })
        }
        (Problem::Scalar2D(m), Solution::Scalar2D { branches, merged }) => {
            let keep = smooth_mask(&merged.field, &merged.curves, 2.0);
            json!({
                "model": m.id(),
                "grid": [merged.field.grid.mx, merged.field.grid.my],
                "branches": branches.iter().map(|b| json!({
                    "origin": b.origin,
                    "valid": b.valid_count(),
                    "substeps": b.substeps,
                })).collect::<Vec<_>>(),
                "curves": merged.curves.iter().map(|c| json!({
                    "vertices": c.vertices.len(),
                    "segments": c.segments.len(),
                    "degenerate_segments": c.degenerate_segments(),
                    "max_rh_residual": c.max_rh_residual(),
                    "min_entropy_margin": c.segments.iter().map(|s| s.entropy_minus.min(s.entropy_plus)).fold(f64::INFINITY, f64::min),
                    "length": c.length(),
                })).collect::<Vec<_>>(),
                "mean_steady_residual": mean_steady_residual(m, &merged.field, &keep),
                "l1_error": scalar_l1_error(m, &merged.field),
            })
        }
        (Problem::Euler2D(e), Solution::System2D { field }) => {
            let shocks = reflection_shocks(field);
            let h0 = e.enthalpy(&e.inflow().to_conserved(e.gamma));
            let keep = smooth_mask(field, &[], EXCLUDE_CELLS);
            let dev = field
                .states
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(w, _)| (e.enthalpy(w) - h0).abs() / h0)
                .fold(0.0, f64::max);
            json!({
                "model": e.id(),
                "grid": [field.grid.mx, field.grid.my],
                "min_marching_eigenvalue": min_marching_eigenvalue(e, field),
                "incident_loci": shocks.incident.len(),
                "reflected_loci": shocks.reflected.len(),
                "incident_slope": shocks.incident_slope,
                "reflected_slope": shocks.reflected_slope,
                "wall_hit": shocks.wall_hit,
                "max_enthalpy_deviation": dev,
                "substeps": field.substeps,
            })
        }
        _ => Value::Null,
    }
}

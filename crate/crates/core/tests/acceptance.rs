//! Acceptance criteria. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use fastsweep::cli::pipeline::{self, Solution, SweepOptions};
use fastsweep::cli::study::study_scaling;
use fastsweep::cli::{run, RunConfig, SolverKind};
use fastsweep::match2d::ShockCurve;
use fastsweep::numerics::{fd_jacobian, inf_norm};
use fastsweep::shock1d::{self, jump, SteadySolution1D};
use fastsweep::sweep1d::Grid1D;
use fastsweep::sweep2d::godunov_flux;
use fastsweep::systems::*;
use nalgebra::dvector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances, pinned.
const BURGERS_SIZES: [usize; 4] = [64, 128, 256, 512];
const BURGERS_RATIO: (f64, f64) = (1.6, 2.6);
const BURGERS_SECONDS: f64 = 1.0;
const RH_REL: f64 = 1e-10;
const LF_CELLS_1D: f64 = 5.0;
const LF_GRID_1D: usize = 257;
const DUCT_N: usize = 2048;
const DUCT_SECONDS: f64 = 10.0;
const MULTI_COUNT: usize = 4;
const NOZZLE_N: usize = 1024;
const NOZZLE_SECONDS: f64 = 30.0;
const NOZZLE_X_T: f64 = 1.5;
const NOZZLE_P_EXIT: f64 = 0.6784;
const THREE_N: usize = 512;
const THREE_SECONDS: f64 = 30.0;
const THREE_ALPHA: f64 = 1.2;
const THREE_SLOPE_CELLS: f64 = 2.0;
const THREE_RH_CELLS: f64 = 10.0;
const BURGERS2D_SIZES: [usize; 3] = [64, 128, 256];
const FIRST_ORDER: (f64, f64) = (0.8, 1.5);
const SCALAR2D_SIZES: [usize; 3] = [128, 256, 512];
const LF_GRID_2D: usize = 65;
const LF_CELLS_2D: f64 = 5.0;
const EULER_N: usize = 256;
const EULER_SECONDS: f64 = 120.0;
const EULER_LF_GRID: usize = 129;
const EULER_LF_CELLS: f64 = 10.0;
const SCALING_2D: (f64, f64) = (0.8, 1.3);
const SCALING_1D: (f64, f64) = (0.9, 1.4);
const JUMP_SAMPLES: usize = 1000;
const GODUNOV_PAIRS: usize = 10_000;
const JACOBIAN_REL: f64 = 1e-5;
const RESTART_TRIALS: usize = 20;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn problem(id: &str) -> Problem {
    build_model(id, &BTreeMap::new()).unwrap()
}

/// `n` cells, so `n + 1` nodes.
fn sweep(id: &str, size: usize) -> Result<(pipeline::SweepOutcome, f64), String> {
    let t = Instant::now();
    let o = pipeline::sweep(&problem(id), &[size], &SweepOptions::default()).map_err(|e| format!("{id} at {size}: {e}"))?;
    Ok((o, t.elapsed().as_secs_f64()))
}

fn one_d(o: &pipeline::SweepOutcome) -> (&Grid1D, &[SteadySolution1D]) {
    match &o.solution {
        Solution::OneD { grid, solutions } => (grid, solutions),
        _ => unreachable!(),
    }
}

fn compare_run(id: &str, size: usize) -> Result<(f64, f64), String> {
    let mut c = RunConfig::new(id).with_grid(&[size]);
    c.solver = SolverKind::Both;
    let r = run(&c).map_err(|e| e.to_string())?;
    let ev = r.report.evolution.as_ref().ok_or("no evolution")?;
    ensure(ev.converged, format!("{id}: LF stopped at residual {:e}", ev.final_residual))?;
    let a = r.report.comparison.ok_or("no comparison")?;
    let h = match r.problem.as_1d() {
        Some(m) => Grid1D::for_model(m, size).unwrap().h(),
        None => r.sweep.as_ref().unwrap().solution.field2d().unwrap().grid.h(),
    };
    Ok((a.l1, h))
}

/// Checks shared by every 1D shock: RH residual, strict Lax conditions and
/// the right boundary condition.
fn shock_invariants(model: &dyn Model1D, s: &SteadySolution1D) -> Result<(), String> {
    let sh = s.shock.as_ref().ok_or("no shock")?;
    let scale = inf_norm(&model.flux(&sh.jump.u_minus)).max(1.0);
    ensure(
        sh.jump.rh_residual <= RH_REL * scale,
        format!("RH residual {:e} at x_s = {}", sh.jump.rh_residual, sh.x_s),
    )?;
    ensure(
        shock1d::lax_entropy(
            &sh.jump.lambda_minus.clone().into(),
            &sh.jump.lambda_plus.clone().into(),
            sh.jump.field,
        ),
        "Lax conditions fail",
    )?;
    ensure(
        s.satisfies_right_bc(),
        format!("right residuals {:?} vs {:?}", s.right_residuals, s.bc_tol),
    )
}

fn c1_burgers1d() -> Outcome {
    let mut errs = Vec::new();
    let mut worst_t = 0.0_f64;
    for n in BURGERS_SIZES {
        let (o, t) = sweep("burgers1d_hj", n + 1)?;
        worst_t = worst_t.max(t);
        ensure(t < BURGERS_SECONDS, format!("N = {n} took {t:.2} s"))?;
        let (grid, sols) = one_d(&o);
        let s = sols.first().ok_or("no solution")?;
        let sh = s.shock.as_ref().ok_or("no shock")?;
        ensure(
            (sh.x_s - 0.5).abs() <= grid.h(),
            format!("N = {n}: shock at {}", sh.x_s),
        )?;
        let err = (0..=sh.node)
            .filter(|&j| grid.x(j) < 0.5)
            .map(|j| (s.state(j).unwrap()[0] - (grid.x(j) / 2.0 + 1.0)).abs())
            .fold(0.0, f64::max);
        errs.push(err);
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    ensure(
        ratios.iter().all(|r| (BURGERS_RATIO.0..=BURGERS_RATIO.1).contains(r)),
        format!("branch error ratios {ratios:.3?}"),
    )?;
    Ok(format!("shock within h at all sizes; ratios {ratios:.2?}; slowest {worst_t:.3} s"))
}

fn c2_isentropic() -> Outcome {
    let (o, t) = sweep("isentropic_duct", DUCT_N + 1)?;
    ensure(t < DUCT_SECONDS, format!("N = {DUCT_N} took {t:.2} s"))?;
    let p = problem("isentropic_duct");
    let m = p.as_1d().unwrap();
    let (grid, sols) = one_d(&o);
    ensure(sols.len() == 1, format!("{} solutions", sols.len()))?;
    let s = &sols[0];
    shock_invariants(m, s)?;
    ensure(s.shock.as_ref().unwrap().jump.field == 0, "not a 1-shock")?;
    let rho_r = s.state(grid.n - 1).unwrap()[0];
    ensure((rho_r - 2.0).abs() <= s.bc_tol[0], format!("rho(1) = {rho_r}"))?;
    let (l1, h) = compare_run("isentropic_duct", LF_GRID_1D)?;
    ensure(l1 <= LF_CELLS_1D * h, format!("LF difference {l1:e} > {LF_CELLS_1D} h"))?;
    Ok(format!(
        "1-shock at {:.4}; LF difference {:.2} h; N = {DUCT_N} in {t:.3} s",
        s.shock.as_ref().unwrap().x_s,
        l1 / h
    ))
}

fn c3_multi() -> Outcome {
    let (o, _) = sweep("isentropic_duct_multi", 513)?;
    let p = problem("isentropic_duct_multi");
    let m = p.as_1d().unwrap();
    let (_, sols) = one_d(&o);
    ensure(sols.len() == MULTI_COUNT, format!("{} solutions", sols.len()))?;
    let cuts = shock1d::default_subdivision(m);
    let mut regions = Vec::new();
    for s in sols {
        shock_invariants(m, s)?;
        let x = s.shock.as_ref().unwrap().x_s;
        regions.push(cuts.iter().filter(|c| **c <= x).count());
    }
    regions.sort();
    regions.dedup();
    ensure(regions.len() == MULTI_COUNT, format!("shocks share sub-intervals: {regions:?}"))?;
    let xs: Vec<f64> = sols.iter().map(|s| s.shock.as_ref().unwrap().x_s).collect();
    Ok(format!("shocks at {xs:.3?}"))
}

fn c4_nozzle() -> Outcome {
    let (o, t) = sweep("nozzle", NOZZLE_N + 1)?;
    ensure(t < NOZZLE_SECONDS, format!("N = {NOZZLE_N} took {t:.2} s"))?;
    let p = problem("nozzle");
    let Problem::Nozzle(nz) = &p else { unreachable!() };
    let (grid, sols) = one_d(&o);
    let s = sols.first().ok_or("nested solve found nothing")?;
    shock_invariants(nz, s)?;
    let h = grid.h();
    let tp = s.turning_points();
    let tp = tp.first().ok_or("no turning point")?;
    ensure((tp.x_t - NOZZLE_X_T).abs() <= h, format!("x_T = {}", tp.x_t))?;
    let pe = nz.pressure(s.state(grid.n - 1).unwrap(), grid.x_right);
    ensure((pe - NOZZLE_P_EXIT).abs() <= s.bc_tol[0], format!("exit pressure {pe}"))?;
    let xs = s.shock.as_ref().unwrap().x_s;
    let trace = s.eigenvalue_trace(nz);
    ensure(trace.first().is_some_and(|(_, l)| l[0] < 0.0), "lambda_1 >= 0 at x_L")?;
    let crossing = trace.windows(2).find(|w| w[0].1[0] < 0.0 && w[1].1[0] > 0.0).map(|w| w[1].0);
    let crossing = crossing.ok_or("no sonic crossing")?;
    ensure((crossing - NOZZLE_X_T).abs() <= 2.0 * h, format!("sonic crossing at {crossing}"))?;
    ensure(
        trace.iter().filter(|(x, _)| *x > crossing && *x < xs - h).all(|(_, l)| l[0] > 0.0),
        "lambda_1 not positive between the sonic point and the shock",
    )?;
    ensure(
        trace.iter().filter(|(x, _)| *x > xs + h).all(|(_, l)| l[0] < 0.0),
        "lambda_1 not negative after the shock",
    )?;
    let (l1, hl) = compare_run("nozzle", LF_GRID_1D)?;
    ensure(l1 <= LF_CELLS_1D * hl, format!("LF difference {l1:e} > {LF_CELLS_1D} h"))?;
    Ok(format!(
        "alpha = {:.4}, x_T = {:.4}, x_S = {xs:.4}, p_exit = {pe:.6}; LF difference {:.2} h; {t:.2} s",
        s.parameters.alphas.first().copied().unwrap_or(f64::NAN),
        tp.x_t,
        l1 / hl
    ))
}

fn scalar(p: &Problem) -> &Scalar2D {
    match p {
        Problem::Scalar2D(m) => m,
        _ => unreachable!(),
    }
}

/// Largest distance of the vertices below `y_max` from the nearer of the two
/// lines `y = a x` and `y = a (1 - x)`, and whether each line is followed.
fn slope_fit(curves: &[ShockCurve], a: f64, y_max: f64) -> (f64, bool, bool) {
    let norm = (1.0 + a * a).sqrt();
    let (mut worst, mut up, mut down) = (0.0_f64, false, false);
    for c in curves {
        for &(x, y) in c.vertices.iter().filter(|v| v.1 < y_max) {
            let d1 = (y - a * x).abs() / norm;
            let d2 = (y - a * (1.0 - x)).abs() / norm;
            worst = worst.max(d1.min(d2));
            up |= d1 < d2;
            down |= d2 < d1;
        }
    }
    (worst, up, down)
}

fn c5_three_states() -> Outcome {
    let (big, t) = sweep("three_states", THREE_N)?;
    ensure(t < THREE_SECONDS, format!("{THREE_N}^2 took {t:.2} s"))?;
    let p = problem("three_states");
    let m = scalar(&p);
    let f = big.solution.field2d().unwrap();
    let curves = big.solution.curves();
    let h = f.grid.h();
    let mut linf = 0.0_f64;
    for j in 0..f.grid.my {
        for i in 0..f.grid.mx {
            let pt = (f.grid.x(i), f.grid.y(j));
            if curves.iter().all(|c| c.distance(pt) > h) {
                let u = f.scalar(i, j).ok_or("masked node")?;
                linf = linf.max((u - m.exact(pt.0, pt.1).unwrap()).abs());
            }
        }
    }
    ensure(linf == 0.0, format!("L_inf away from curves {linf:e}"))?;
    // The two sloped shocks meet at y = alpha / 2.
    let (dev, up, down) = slope_fit(curves, THREE_ALPHA, 0.5 * THREE_ALPHA - 2.0 * h);
    ensure(up && down, "a sloped shock is missing")?;
    ensure(dev <= THREE_SLOPE_CELLS * h, format!("curves {:.2} cells off the +-1.2 lines", dev / h))?;

    let (pert, _) = sweep("three_states_perturbed", 129)?;
    let pc = pert.solution.curves();
    let hp = pert.solution.field2d().unwrap().grid.h();
    let (pdev, _, _) = slope_fit(pc, THREE_ALPHA, 0.5 * THREE_ALPHA - 2.0 * hp);
    ensure(pdev > THREE_SLOPE_CELLS * hp, format!("perturbed curves are straight ({:.2} cells)", pdev / hp))?;
    let scale = 1.0 + 0.75 + 0.2;
    let rh = pc.iter().map(|c| c.max_rh_residual()).fold(0.0, f64::max);
    ensure(rh <= THREE_RH_CELLS * hp * scale, format!("perturbed RH residual {rh:e}"))?;
    Ok(format!(
        "exact away from curves; slope deviation {:.2} cells; perturbed bend {:.1} cells, RH {rh:.1e}; {THREE_N}^2 in {t:.2} s",
        dev / h,
        pdev / hp
    ))
}

static LOG: Mutex<Vec<String>> = Mutex::new(Vec::new());

struct Capture;

impl log::Log for Capture {
    fn enabled(&self, m: &log::Metadata) -> bool {
        m.level() <= log::Level::Info
    }
    fn log(&self, r: &log::Record) {
        if self.enabled(r.metadata()) {
            LOG.lock().unwrap().push(r.args().to_string());
        }
    }
    fn flush(&self) {}
}

fn order(a: f64, b: f64) -> f64 {
    (a / b).log2()
}

fn c6_burgers2d() -> Outcome {
    let p = problem("burgers2d");
    let m = scalar(&p);
    let exact = pipeline::exact_curves("burgers2d").unwrap();
    let mut l1 = Vec::new();
    let mut degenerate = 0;
    let mut worst = 0.0_f64;
    for n in BURGERS2D_SIZES {
        let (o, _) = sweep("burgers2d", n + 1)?;
        let f = o.solution.field2d().unwrap();
        let curves = o.solution.curves();
        ensure(curves.len() == 1, format!("{} curves at {n}", curves.len()))?;
        let hd = curves[0].hausdorff(&exact[0]);
        worst = worst.max(hd / f.grid.h());
        ensure(hd <= f.grid.h(), format!("Hausdorff {hd:e} at {n}"))?;
        degenerate += curves[0].degenerate_segments();
        l1.push(pipeline::scalar_l1_error(m, f).unwrap());
    }
    let orders: Vec<f64> = l1.windows(2).map(|w| order(w[0], w[1])).collect();
    let overall = order(l1[0], l1[2]) / 2.0;
    ensure(
        (FIRST_ORDER.0..=FIRST_ORDER.1).contains(&overall),
        format!("L1 orders {orders:.3?}"),
    )?;
    ensure(degenerate > 0, "degenerate entropy path not used")?;
    let logged = LOG.lock().unwrap().iter().any(|l| l.contains("burgers2d") && l.contains("zero-flux-jump"));
    ensure(logged, "degenerate path not logged")?;
    Ok(format!(
        "Hausdorff <= {worst:.2} h; L1 order {overall:.2} {orders:.2?}; {degenerate} degenerate segments logged"
    ))
}

/// The fan focuses at the first point and the shock runs to the second.
/// Orders are measured on a fixed region away from both, since the fan's
/// gradient is unbounded at the focus.
const SCALAR2D_SHOCK: ((f64, f64), (f64, f64)) = ((0.75, 0.5), (1.0, 1.0));
const SCALAR2D_SMOOTH: f64 = 0.1;

fn segment_distance(p: (f64, f64), (a, b): ((f64, f64), (f64, f64))) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

fn c7_scalar2d() -> Outcome {
    let p = problem("scalar2d");
    let mut res = Vec::new();
    for n in SCALAR2D_SIZES {
        let (o, _) = sweep("scalar2d", n + 1)?;
        let Solution::Scalar2D { branches, merged } = &o.solution else {
            unreachable!()
        };
        ensure(branches.len() == 1 && branches[0].fully_valid(), "bottom sweep does not cover the grid")?;
        let g = merged.field.grid;
        let mut keep = vec![true; g.len()];
        for j in 0..g.my {
            for i in 0..g.mx {
                keep[g.idx(i, j)] = segment_distance((g.x(i), g.y(j)), SCALAR2D_SHOCK) > SCALAR2D_SMOOTH;
            }
        }
        res.push(pipeline::mean_steady_residual(scalar(&p), &merged.field, &keep));
    }
    let overall = order(res[0], res[2]) / 2.0;
    ensure(
        (FIRST_ORDER.0..=FIRST_ORDER.1).contains(&overall),
        format!("residuals {res:?}, order {overall:.2}"),
    )?;
    let (l1, h) = compare_run("scalar2d", LF_GRID_2D)?;
    ensure(l1 <= LF_CELLS_2D * h, format!("LF difference {l1:e} > {LF_CELLS_2D} h"))?;
    Ok(format!("residual order {overall:.2}; LF difference {:.2} h", l1 / h))
}

fn c8_euler() -> Outcome {
    let (o, t) = sweep("euler2d_reflection", EULER_N)?;
    ensure(t < EULER_SECONDS, format!("{EULER_N}^2 took {t:.2} s"))?;
    let p = problem("euler2d_reflection");
    let Problem::Euler2D(e) = &p else { unreachable!() };
    let f = o.solution.field2d().unwrap();
    ensure(f.fully_valid(), "left sweep left masked nodes")?;
    let lmin = pipeline::min_marching_eigenvalue(e, f);
    ensure(lmin > 0.0, format!("min u - c = {lmin}"))?;
    let r = pipeline::reflection_shocks(f);
    ensure(!r.incident.is_empty(), "no incident shock")?;
    ensure(!r.reflected.is_empty(), "no reflected shock")?;
    let (si, sr) = (r.incident_slope.unwrap_or(0.0), r.reflected_slope.unwrap_or(0.0));
    ensure(si < 0.0 && sr > 0.0, format!("slopes {si}, {sr}"))?;
    let (l1, h) = compare_run("euler2d_reflection", EULER_LF_GRID)?;
    ensure(l1 <= EULER_LF_CELLS * h, format!("LF difference {l1:e} > {EULER_LF_CELLS} h"))?;
    Ok(format!(
        "min u - c = {lmin:.3}; incident slope {si:.3}, reflected {sr:.3}, wall hit {:.3}; LF difference {:.2} h; {EULER_N}^2 in {t:.2} s",
        r.wall_hit.unwrap_or(f64::NAN),
        l1 / h
    ))
}

fn slope(id: &str, sizes: &[usize], range: (f64, f64)) -> Result<f64, String> {
    let mut c = RunConfig::new(id);
    c.sizes = sizes.to_vec();
    c.repeats = 3;
    let t = study_scaling(&c).map_err(|e| e.to_string())?;
    if let Some(e) = t.failure {
        return Err(format!("{id}: {e}"));
    }
    let s = t.slope.ok_or("no slope")?;
    ensure((range.0..=range.1).contains(&s), format!("{id} slope {s:.3}"))?;
    Ok(s)
}

fn c9_scaling() -> Outcome {
    let b = slope("burgers2d", &[129, 257, 513, 1025], SCALING_2D)?;
    let s = slope("scalar2d", &[129, 257, 513, 1025], SCALING_2D)?;
    let d = slope("isentropic_duct", &[1025, 2049, 4097, 8193], SCALING_1D)?;
    Ok(format!("slopes: burgers2d {b:.2}, scalar2d {s:.2}, isentropic_duct {d:.2}"))
}

fn rh_ok(model: &dyn Model1D, um: &StateVector, up: &StateVector) -> bool {
    let fm = model.flux(um);
    (model.flux(up) - &fm).amax() <= RH_REL * (1.0 + fm.amax())
}

fn c10_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let burgers = Scalar1D::burgers_hj();
    let duct = IsentropicDuct::single();
    let nozzle = Nozzle::standard();
    for _ in 0..JUMP_SAMPLES {
        let cases: [(&dyn Model1D, StateVector); 3] = [
            (&burgers, dvector![rng.random_range(0.05..5.0)]),
            (&duct, {
                let rho = rng.random_range(0.2..5.0);
                dvector![rho, rho * rng.random_range(1.05..4.0) * duct.sound_speed(rho)]
            }),
            (&nozzle, {
                let (rho, p) = (rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
                let c = (nozzle.gamma * p / rho).sqrt();
                nozzle.from_primitive(rho, rng.random_range(1.05..4.0) * c, p, rng.random_range(0.0..3.0))
            }),
        ];
        for (m, u) in cases {
            let j = jump(m, &u).map_err(|e| format!("{}: jump from {u:?}: {e}", m.id()))?;
            ensure(j.entropy_ok && rh_ok(m, &u, &j.u_plus), format!("{}: bad jump from {u:?}", m.id()))?;
        }
    }
    let fluxes = [ScalarFlux::quadratic(0.5), ScalarFlux::linear(), ScalarFlux::cubic()];
    for _ in 0..GODUNOV_PAIRS {
        let (a, b, d) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), rng.random_range(0.0..1.0));
        for f in &fluxes {
            let base = godunov_flux(f, a, b);
            let tol = 1e-12 * (1.0 + base.abs());
            ensure((godunov_flux(f, a, a) - f.eval(a)).abs() <= tol, "Godunov flux inconsistent")?;
            ensure(godunov_flux(f, a + d, b) >= base - tol, "Godunov flux not monotone in u_l")?;
            ensure(godunov_flux(f, a, b + d) <= base + tol, "Godunov flux not monotone in u_r")?;
        }
    }
    let close = |a: &Matrix, b: &Matrix| (a - b).amax() <= JACOBIAN_REL * (1.0 + a.amax());
    let euler = Euler2D::standard();
    let multi = IsentropicDuct::multi();
    for _ in 0..100 {
        let (rho, vel, p) = (rng.random_range(0.3..3.0), rng.random_range(-2.0..2.0), rng.random_range(0.3..3.0));
        let cases: [(&dyn Model1D, StateVector); 4] = [
            (&burgers, dvector![vel]),
            (&duct, dvector![rho, rho * vel]),
            (&multi, dvector![rho, rho * vel]),
            (&nozzle, nozzle.from_primitive(rho, vel, p, 1.0)),
        ];
        for (m, u) in cases {
            ensure(close(&m.jacobian(&u), &fd_jacobian(|w| m.flux(w), &u, 1e-7)), format!("{} Jacobian", m.id()))?;
        }
        let w = Primitive2D {
            rho,
            u: vel + 3.0,
            v: vel / 2.0,
            p,
        }
        .to_conserved(euler.gamma);
        ensure(close(&euler.jacobian_f(&w), &fd_jacobian(|w| euler.flux_f(w), &w, 1e-7)), "Euler f Jacobian")?;
        ensure(close(&euler.jacobian_g(&w), &fd_jacobian(|w| euler.flux_g(w), &w, 1e-7)), "Euler g Jacobian")?;
        for f in &fluxes {
            let u = rng.random_range(-3.0..3.0);
            let fd = (f.eval(u + 1e-6) - f.eval(u - 1e-6)) / 2e-6;
            ensure((f.deriv(u) - fd).abs() <= JACOBIAN_REL * (1.0 + fd.abs()), "scalar flux derivative")?;
        }
    }
    let mut worst = 0.0_f64;
    for m in [&burgers as &dyn Model1D, &duct] {
        let grid = Grid1D::for_model(m, 257).unwrap();
        let left = shock1d::left_branch(m, &[], &grid).map_err(|e| e.to_string())?;
        let full = (grid.x_left, grid.x_right);
        let xs = shock1d::solve_shock_on_branch(m, &left, &[], full, None)
            .map_err(|e| e.to_string())?
            .shock
            .unwrap()
            .x_s;
        let h = grid.h();
        for _ in 0..RESTART_TRIALS {
            let lo = rng.random_range(grid.x_left..xs - 2.0 * h);
            let hi = rng.random_range(xs + 2.0 * h..grid.x_right);
            let s = shock1d::solve_shock_on_branch(m, &left, &[], (lo, hi), None).map_err(|e| e.to_string())?;
            let d = (s.shock.unwrap().x_s - xs).abs() / h;
            worst = worst.max(d);
            ensure(d <= 1.0, format!("{}: bracket ({lo}, {hi}) lands {d:.2} cells off", m.id()))?;
        }
    }
    Ok(format!(
        "{JUMP_SAMPLES} jumps per model, {GODUNOV_PAIRS} flux pairs, Jacobians, {RESTART_TRIALS} restarts per model (worst {worst:.2} cells)"
    ))
}

fn main() {
    // libtest flags such as --nocapture or a filter are accepted and ignored.
    log::set_logger(&Capture).unwrap();
    log::set_max_level(log::LevelFilter::Info);
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("burgers1d_hj shock and branch order", c1_burgers1d),
        ("isentropic_duct single shock", c2_isentropic),
        ("isentropic_duct_multi four solutions", c3_multi),
        ("nozzle nested solve", c4_nozzle),
        ("three_states merge", c5_three_states),
        ("burgers2d curve and order", c6_burgers2d),
        ("scalar2d bottom sweep", c7_scalar2d),
        ("euler2d_reflection left sweep", c8_euler),
        ("scaling slopes", c9_scaling),
        ("property suites", c10_properties),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{secs:.1} s]", k + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{secs:.1} s]", k + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Independent oracles: Lax-Friedrichs time evolution run to steady state,
//! bisection roots and a fine RK4 integration of smooth branches.

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{all_finite, bisect, inf_norm, solve_linear};
use crate::sweep1d::Grid1D;
use crate::sweep2d::{Field2D, Grid2D};
use crate::systems::{Conservation2D, Model1D, Side, StateVector};

pub const LF_CFL: f64 = 0.45;
/// Steady tolerance relative to the state scale.
pub const LF_STEADY_REL: f64 = 1e-8;
pub const LF_MAX_STEPS: usize = 1_000_000;
/// States beyond this multiple of the initial scale count as blow-up.
const BLOWUP: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveOptions {
    pub cfl: f64,
    /// Absolute tolerance; `None` means `LF_STEADY_REL` times the state scale.
    pub steady_tol: Option<f64>,
    pub max_steps: usize,
    /// Abort once the residual has not halved over this many steps.
    /// `None` picks a multiple of the grid size.
    pub stagnation_window: Option<usize>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            cfl: LF_CFL,
            steady_tol: None,
            max_steps: LF_MAX_STEPS,
            stagnation_window: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionRun {
    pub model: String,
    pub nodes: Vec<usize>,
    pub cfl: f64,
    pub steady_tol: f64,
    pub max_steps: usize,
    pub steps: usize,
    /// `|U^{n+1} - U^n|_1 / dt` per step, grid-weighted.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub stagnated: bool,
}

impl EvolutionRun {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }

    pub fn history_csv(&self) -> String {
        let mut s = String::from("step,residual\n");
        for (k, r) in self.residuals.iter().enumerate() {
            s.push_str(&format!("{},{:e}\n", k + 1, r));
        }
        s
    }
}

struct Monitor {
    tol: f64,
    window: usize,
    best: f64,
    best_at: usize,
}

impl Monitor {
    /// `Some(stagnated)` when the run should stop.
    fn check(&mut self, step: usize, r: f64) -> Option<bool> {
        if r <= self.tol {
            return Some(false);
        }
        if r < 0.5 * self.best {
            self.best = r;
            self.best_at = step;
        }
        (step - self.best_at > self.window).then_some(true)
    }
}

fn resolve(opts: &EvolveOptions, scale: f64, nodes: usize) -> Result<(f64, usize)> {
    if !(opts.cfl > 0.0 && opts.cfl < 1.0) {
        return Err(Error::Config(format!("cfl must lie in (0, 1), got {}", opts.cfl)));
    }
    let tol = opts.steady_tol.unwrap_or(LF_STEADY_REL * scale.max(1e-300));
    Ok((tol, opts.stagnation_window.unwrap_or(50 * nodes + 1000)))
}

/// Initial field linearly interpolated between the model's left and right
/// reference states.
pub fn linear_init_1d(model: &dyn Model1D, grid: &Grid1D) -> Vec<StateVector> {
    let b = model.boundary();
    (0..grid.n)
        .map(|j| {
            let t = (grid.x(j) - grid.x_left) / (grid.x_right - grid.x_left);
            &b.left_reference * (1.0 - t) + &b.right_reference * t
        })
        .collect()
}

/// Conservative scheme with the global Lax-Friedrichs flux
/// `(f_l + f_r)/2 - a (U_r - U_l)/2`, `a` the largest spectral radius on
/// the grid, forward Euler in time and explicit source; run until the
/// update rate drops below the steady tolerance. End nodes hold the
/// boundary ghost states.
pub fn evolve_lf_1d(
    model: &dyn Model1D,
    grid: &Grid1D,
    init: &[StateVector],
    opts: &EvolveOptions,
) -> Result<(EvolutionRun, Vec<StateVector>)> {
    let n = grid.n;
    if init.len() != n || init.iter().any(|u| !all_finite(u) || u.len() != model.size()) {
        return Err(Error::Config("initial field must be finite with one state per node".into()));
    }
    let scale = init.iter().map(inf_norm).fold(0.0, f64::max);
    let (tol, window) = resolve(opts, scale, n)?;
    let h = grid.h();
    let b = model.boundary();
    let mut u = init.to_vec();
    u[0] = (b.left_ghost)(&u[1]);
    u[n - 1] = (b.right_ghost)(&u[n - 2]);
    let mut next = u.clone();
    let mut run = EvolutionRun {
        model: model.id().to_string(),
        nodes: vec![n],
        cfl: opts.cfl,
        steady_tol: tol,
        max_steps: opts.max_steps,
        steps: 0,
        residuals: Vec::new(),
        converged: false,
        stagnated: false,
    };
    let mut mon = Monitor {
        tol,
        window,
        best: f64::INFINITY,
        best_at: 0,
    };
    for step in 1..=opts.max_steps {
        let mut speed = 0.0_f64;
        for s in &u {
            let l = model.eigenvalues(s).map_err(|_| Error::Divergence { step })?;
            speed = speed.max(inf_norm(&l));
        }
        if !(speed > 0.0) {
            speed = 1.0;
        }
        let dt = opts.cfl * h / speed;
        let fl: Vec<StateVector> = u.iter().map(|s| model.flux(s)).collect();
        let iface: Vec<StateVector> = (0..n - 1)
            .map(|j| (&fl[j] + &fl[j + 1]) * 0.5 - (&u[j + 1] - &u[j]) * (0.5 * speed))
            .collect();
        for j in 1..n - 1 {
            next[j] = &u[j] - (&iface[j] - &iface[j - 1]) * (dt / h) + model.source(&u[j], grid.x(j)) * dt;
        }
        next[0] = (b.left_ghost)(&next[1]);
        next[n - 1] = (b.right_ghost)(&next[n - 2]);
        let mut change = 0.0;
        for j in 0..n {
            let d = &next[j] - &u[j];
            if !model.admissible(&next[j]) || inf_norm(&next[j]) > BLOWUP * scale.max(1.0) {
                return Err(Error::Divergence { step });
            }
            change += d.iter().map(|v| v.abs()).sum::<f64>();
        }
        std::mem::swap(&mut u, &mut next);
        let r = change * h / dt;
        run.residuals.push(r);
        run.steps = step;
        if let Some(stag) = mon.check(step, r) {
            run.converged = !stag;
            run.stagnated = stag;
            break;
        }
    }
    info!(
        "lf1d {}: {} steps, residual {:e} (tol {:e}), converged {}",
        run.model,
        run.steps,
        run.final_residual(),
        tol,
        run.converged
    );
    Ok((run, u))
}

/// Two-dimensional analogue on a rectangular grid. Boundary nodes hold the
/// model's ghost states for their side (corners take the `x` sides).
pub fn evolve_lf_2d(
    model: &dyn Conservation2D,
    grid: &Grid2D,
    init: &[StateVector],
    opts: &EvolveOptions,
) -> Result<(EvolutionRun, Field2D)> {
    let (mx, my) = (grid.mx, grid.my);
    if init.len() != grid.len() || init.iter().any(|u| !all_finite(u) || u.len() != model.size()) {
        return Err(Error::Config("initial field must be finite with one state per node".into()));
    }
    let scale = init.iter().map(inf_norm).fold(0.0, f64::max);
    let (tol, window) = resolve(opts, scale, mx.max(my))?;
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut u = init.to_vec();
    let apply_ghosts = |u: &mut Vec<StateVector>| {
        for j in 0..my {
            let y = grid.y(j);
            u[grid.idx(0, j)] = model.ghost(Side::Left, &u[grid.idx(1, j)], grid.x(0), y);
            u[grid.idx(mx - 1, j)] = model.ghost(Side::Right, &u[grid.idx(mx - 2, j)], grid.x(mx - 1), y);
        }
        for i in 1..mx - 1 {
            let x = grid.x(i);
            u[grid.idx(i, 0)] = model.ghost(Side::Bottom, &u[grid.idx(i, 1)], x, grid.y(0));
            u[grid.idx(i, my - 1)] = model.ghost(Side::Top, &u[grid.idx(i, my - 2)], x, grid.y(my - 1));
        }
    };
    apply_ghosts(&mut u);
    let mut next = u.clone();
    let mut f = vec![0.0; grid.len() * model.size()];
    let mut g = f.clone();
    let mut flat = f.clone();
    let mut run = EvolutionRun {
        model: model.id().to_string(),
        nodes: vec![mx, my],
        cfl: opts.cfl,
        steady_tol: tol,
        max_steps: opts.max_steps,
        steps: 0,
        residuals: Vec::new(),
        converged: false,
        stagnated: false,
    };
    let mut mon = Monitor {
        tol,
        window,
        best: f64::INFINITY,
        best_at: 0,
    };
    for step in 1..=opts.max_steps {
        let (mut ax, mut ay) = (0.0_f64, 0.0_f64);
        for s in &u {
            let (sx, sy) = model.max_speeds(s);
            ax = ax.max(sx);
            ay = ay.max(sy);
        }
        if !(ax + ay > 0.0) {
            (ax, ay) = (1.0, 1.0);
        }
        let dt = opts.cfl / (ax / hx + ay / hy);
        let nc = model.size();
        for (k, s) in u.iter().enumerate() {
            f[k * nc..(k + 1) * nc].copy_from_slice(model.flux_f(s).as_slice());
            g[k * nc..(k + 1) * nc].copy_from_slice(model.flux_g(s).as_slice());
            flat[k * nc..(k + 1) * nc].copy_from_slice(s.as_slice());
        }
        let (cx, cy) = (dt / hx, dt / hy);
        for j in 1..my - 1 {
            for i in 1..mx - 1 {
                let k = grid.idx(i, j);
                let (e, w, nn, so) = (k + 1, k - 1, k + mx, k - mx);
                let src = model.source(&u[k], grid.x(i), grid.y(j));
                let out = &mut next[k];
                for c in 0..nc {
                    let at = |n: usize| n * nc + c;
                    // Differences of the two interface fluxes on each axis.
                    let dfx = 0.5 * (f[at(e)] - f[at(w)]) - 0.5 * ax * (flat[at(e)] - 2.0 * flat[at(k)] + flat[at(w)]);
                    let dgy = 0.5 * (g[at(nn)] - g[at(so)]) - 0.5 * ay * (flat[at(nn)] - 2.0 * flat[at(k)] + flat[at(so)]);
                    out[c] = flat[at(k)] - cx * dfx - cy * dgy + dt * src[c];
                }
            }
        }
        apply_ghosts(&mut next);
        let mut change = 0.0;
        for k in 0..grid.len() {
            if !model.admissible(&next[k]) || inf_norm(&next[k]) > BLOWUP * scale.max(1.0) {
                return Err(Error::Divergence { step });
            }
            change += (0..nc).map(|c| (next[k][c] - flat[k * nc + c]).abs()).sum::<f64>();
        }
        std::mem::swap(&mut u, &mut next);
        let r = change * hx * hy / dt;
        run.residuals.push(r);
        run.steps = step;
        if step % 10_000 == 0 {
            debug!("lf2d {} step {step}: residual {r:e}", run.model);
        }
        if let Some(stag) = mon.check(step, r) {
            run.converged = !stag;
            run.stagnated = stag;
            break;
        }
    }
    info!(
        "lf2d {}: {} steps, residual {:e} (tol {:e}), converged {}",
        run.model,
        run.steps,
        run.final_residual(),
        tol,
        run.converged
    );
    let mut field = Field2D::constant(*grid, u[0].clone(), Side::Left);
    field.states = u;
    Ok((run, field))
}

/// Initial field for 2D evolution from the model's own guess.
pub fn model_init_2d(model: &dyn Conservation2D, grid: &Grid2D) -> Vec<StateVector> {
    let mut v = Vec::with_capacity(grid.len());
    for j in 0..grid.my {
        for i in 0..grid.mx {
            v.push(model.initial_state(grid.x(i), grid.y(j)));
        }
    }
    v
}

/// Root of `f` in `[lo, hi]` by bisection to bracket width `tol`.
pub fn oracle_scalar_root<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    bisect(f, lo, hi, tol)
}

/// Smooth branch `f(U)_x = a(U, x)` from `u0` at node `from` to node `to`,
/// integrated as `U' = A(U)^-1 a` with classical RK4 on `sub` steps per
/// cell. Fails near sonic states.
pub fn oracle_branch_rk4(
    model: &dyn Model1D,
    u0: &StateVector,
    grid: &Grid1D,
    from: usize,
    to: usize,
    sub: usize,
) -> Result<Vec<StateVector>> {
    let rhs = |u: &StateVector, x: f64| -> Result<StateVector> {
        solve_linear(model.jacobian(u), &model.source(u, x)).ok_or(Error::NearSonic)
    };
    let dir: i64 = if to >= from { 1 } else { -1 };
    let mut u = u0.clone();
    let mut out = vec![u.clone()];
    let mut j = from as i64;
    while j != to as i64 {
        let (xa, xb) = (grid.x(j as usize), grid.x((j + dir) as usize));
        let dx = (xb - xa) / sub.max(1) as f64;
        for s in 0..sub.max(1) {
            let x = xa + s as f64 * dx;
            let k1 = rhs(&u, x)?;
            let k2 = rhs(&(&u + &k1 * (0.5 * dx)), x + 0.5 * dx)?;
            let k3 = rhs(&(&u + &k2 * (0.5 * dx)), x + 0.5 * dx)?;
            let k4 = rhs(&(&u + &k3 * dx), x + dx)?;
            u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dx / 6.0);
            if !model.admissible(&u) {
                return Err(Error::Domain(format!("rk4 oracle left the admissible set at x = {x}")));
            }
        }
        out.push(u.clone());
        j += dir;
    }
    Ok(out)
}

//! Stationary shocks in 1D: the jump operator with Lax entropy checks, the
//! shock-location bisection, multi-solution scans and the nested solve for
//! missing boundary data.

use log::{debug, info};
use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{self, fd_jacobian, inf_norm, NEWTON_MAX_ITER, NEWTON_TOL};
use crate::sweep1d::{compat_residual, propagate_through_sonic, ser_state, Branch1D, Grid1D, TurningPoint};
use crate::systems::{eval_eigen, smallest_positive_field, Model1D, StateVector};

/// Trivial-root exclusion: `|U+ - U-| >= MIN_JUMP * (1 + |U-|)`.
pub const MIN_JUMP: f64 = 1e-6;
/// Right-boundary tolerance is `BC_TOL * h * scale`.
pub const BC_TOL: f64 = 10.0;
/// Half-width of the default bracket around a parameter seed, relative.
pub const SEED_BRACKET: f64 = 0.5;
/// Coarse subdivisions tried when a shock bracket end is infeasible.
const SCAN: usize = 16;

/// Post-shock state of a stationary shock.
#[derive(Debug, Clone, Serialize)]
pub struct JumpResult {
    #[serde(serialize_with = "ser_state")]
    pub u_minus: StateVector,
    #[serde(serialize_with = "ser_state")]
    pub u_plus: StateVector,
    pub rh_residual: f64,
    pub entropy_ok: bool,
    pub field: usize,
    pub separation: f64,
    pub lambda_minus: Vec<f64>,
    pub lambda_plus: Vec<f64>,
}

fn min_jump(u: &StateVector) -> f64 {
    MIN_JUMP * (1.0 + inf_norm(u))
}

/// Lax conditions for a stationary `k`-shock:
/// `lambda_k(U+) < 0 < lambda_k(U-)`, `lambda_{k-1}(U-) < 0 < lambda_{k+1}(U+)`.
pub fn lax_entropy(minus: &DVector<f64>, plus: &DVector<f64>, k: usize) -> bool {
    let n = minus.len();
    plus[k] < 0.0 && minus[k] > 0.0 && (k == 0 || minus[k - 1] < 0.0) && (k + 1 == n || plus[k + 1] > 0.0)
}

/// Jump in the field of the smallest positive eigenvalue at `U-`.
pub fn jump(model: &dyn Model1D, u_minus: &StateVector) -> Result<JumpResult> {
    let e = eval_eigen(model, u_minus)?;
    let k = smallest_positive_field(&e.values).unwrap_or(model.size() - 1);
    jump_in_field(model, u_minus, k)
}

/// Solve `f(U+) = f(U-)` for a non-trivial root in field `k` and check the
/// Lax conditions.
///
/// The first guess reflects `U-` through the sonic value of `lambda_k`
/// along the right eigenvector: `U- + eps r_k` with
/// `eps = -2 lambda_k / (grad lambda_k . r_k)`, then scaled variants.
pub fn jump_in_field(model: &dyn Model1D, u_minus: &StateVector, k: usize) -> Result<JumpResult> {
    let e = eval_eigen(model, u_minus)?;
    if k >= model.size() {
        return Err(Error::Config(format!("field {k} out of range")));
    }
    let f_minus = model.flux(u_minus);
    let r_k = e.right.column(k).into_owned();
    let lambda_k = |u: &StateVector| model.eigenvalues(u).map(|l| l[k]).unwrap_or(f64::NAN);
    let grad = fd_jacobian(|s| DVector::from_element(1, lambda_k(s)), u_minus, 1e-7);
    let dl = (grad * &r_k)[0];
    let base = if dl.abs() > 1e-14 { -2.0 * e.values[k] / dl } else { 1.0 };
    let tol = NEWTON_TOL * inf_norm(&f_minus).max(1.0);
    let sep_min = min_jump(u_minus);
    let nontrivial = |u: &StateVector| inf_norm(&(u - u_minus)) >= sep_min;
    let polish = |g: StateVector| {
        numerics::newton(
            g,
            tol,
            NEWTON_MAX_ITER,
            |u| (model.flux(u) - &f_minus, model.jacobian(u)),
            |u| model.admissible(u),
        )
        .ok()
        .map(|o| o.x)
        .filter(nontrivial)
    };
    let mut found = [1.0, 1.5, 0.75, 2.0]
        .iter()
        .map(|s| u_minus + &r_k * (base * s))
        .filter(|g| model.admissible(g))
        .find_map(polish);
    if found.is_none() {
        found = hugoniot_guess(model, u_minus, &e, k, base).and_then(polish);
    }
    let u_plus = found.ok_or(Error::NoShockPossible)?;
    let plus = eval_eigen(model, &u_plus)?.values;
    let ok = lax_entropy(&e.values, &plus, k);
    if !ok {
        return Err(Error::EntropyViolation {
            field: k,
            minus: e.values.iter().copied().collect(),
            plus: plus.iter().copied().collect(),
        });
    }
    Ok(JumpResult {
        rh_residual: inf_norm(&(model.flux(&u_plus) - &f_minus)),
        separation: inf_norm(&(&u_plus - u_minus)),
        u_minus: u_minus.clone(),
        u_plus,
        entropy_ok: ok,
        field: k,
        lambda_minus: e.values.iter().copied().collect(),
        lambda_plus: plus.iter().copied().collect(),
    })
}

/// Follow the Hugoniot locus `f(U) - f(U-) = s (U - U-)` of field `k` out of
/// `U-` until the shock speed `s` vanishes. The locus is written as
/// `U = U- + eps w` with `l_k . w = 1`, which removes the trivial branch.
fn hugoniot_guess(
    model: &dyn Model1D,
    u_minus: &StateVector,
    e: &crate::systems::Eigen,
    k: usize,
    base: f64,
) -> Option<StateVector> {
    let n = model.size();
    let l = e.left.row(k).transpose();
    let r = e.right.column(k).into_owned();
    let w0 = &r / l.dot(&r);
    let f_minus = model.flux(u_minus);
    let solve = |eps: f64, ws: &DVector<f64>| {
        let eval = |z: &DVector<f64>| {
            let w = z.rows(0, n).into_owned();
            let s = z[n];
            let u = u_minus + &w * eps;
            let mut res = DVector::zeros(n + 1);
            res.rows_mut(0, n).copy_from(&((model.flux(&u) - &f_minus) / eps - &w * s));
            res[n] = l.dot(&w) - 1.0;
            let mut jac = nalgebra::DMatrix::zeros(n + 1, n + 1);
            let a = model.jacobian(&u) - nalgebra::DMatrix::identity(n, n) * s;
            jac.view_mut((0, 0), (n, n)).copy_from(&a);
            jac.view_mut((0, n), (n, 1)).copy_from(&(-&w));
            jac.view_mut((n, 0), (1, n)).copy_from(&l.transpose());
            (res, jac)
        };
        let scale = e.values.amax().max(1.0) * inf_norm(&w0).max(1.0);
        numerics::newton(ws.clone(), NEWTON_TOL * scale, NEWTON_MAX_ITER, eval, |z| {
            model.admissible(&(u_minus + z.rows(0, n) * eps))
        })
        .ok()
        .map(|o| o.x)
    };
    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(&w0);
    z[n] = e.values[k];
    let mut eps = 0.0;
    let mut d = base / 8.0;
    let s_step = 0.25 * e.values.amax();
    for _ in 0..400 {
        if d.abs() < 1e-8 * base.abs() {
            return None;
        }
        // A large change in s means Newton hopped onto another locus.
        let Some(zn) = solve(eps + d, &z).filter(|zn| (zn[n] - z[n]).abs() <= s_step) else {
            d *= 0.5;
            continue;
        };
        if zn[n] * z[n] <= 0.0 {
            // Linear interpolation in eps for s = 0.
            let t = z[n] / (z[n] - zn[n]);
            let w = z.rows(0, n) * (1.0 - t) + zn.rows(0, n) * t;
            return Some(u_minus + w * (eps + t * d));
        }
        eps += d;
        z = zn;
        d *= 1.5;
    }
    None
}

/// One unknown of the nested solve and the function that determines it.
#[derive(Debug, Clone, Serialize)]
pub struct Binding {
    pub unknown: String,
    pub matching: String,
    /// Where the matching function was evaluated (`x_T` or `x_R`).
    pub location: f64,
    pub bracket: (f64, f64),
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ParameterVector {
    pub alphas: Vec<f64>,
    pub x_s: Option<f64>,
    pub bindings: Vec<Binding>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Shock {
    pub node: usize,
    pub x_s: f64,
    pub jump: JumpResult,
}

/// A piecewise-smooth steady solution: the left branch up to the shock, the
/// jump, then the post-shock branch.
#[derive(Debug, Clone)]
pub struct SteadySolution1D {
    pub grid: Grid1D,
    pub parameters: ParameterVector,
    pub left: Branch1D,
    pub shock: Option<Shock>,
    pub right: Option<Branch1D>,
    /// `B_R(U(x_R))`, one entry per right condition.
    pub right_residuals: Vec<f64>,
    pub bc_tol: Vec<f64>,
    /// Set when the candidate could not be completed.
    pub infeasible: Option<String>,
}

impl SteadySolution1D {
    /// Assembled state at node `j`: `U-` up to and including the shock node,
    /// `U+` after it.
    pub fn state(&self, j: usize) -> Option<&StateVector> {
        match (&self.shock, &self.right) {
            (Some(s), Some(r)) if j > s.node => r.state(j),
            _ => self.left.state(j),
        }
    }

    pub fn states(&self) -> Vec<Option<StateVector>> {
        (0..self.grid.n).map(|j| self.state(j).cloned()).collect()
    }

    pub fn feasible(&self) -> bool {
        self.infeasible.is_none()
    }

    /// Whether every right condition holds to `bc_tol`.
    pub fn satisfies_right_bc(&self) -> bool {
        self.feasible()
            && self
                .right_residuals
                .iter()
                .zip(&self.bc_tol)
                .all(|(r, t)| r.abs() <= *t)
    }

    pub fn turning_points(&self) -> Vec<&TurningPoint> {
        let mut tps: Vec<&TurningPoint> = self.left.turning_points.iter().collect();
        if let (Some(s), Some(r)) = (&self.shock, &self.right) {
            tps.retain(|tp| tp.x_t <= s.x_s);
            tps.extend(r.turning_points.iter());
        }
        tps
    }

    /// Eigenvalues at every valid node.
    pub fn eigenvalue_trace(&self, model: &dyn Model1D) -> Vec<(f64, Vec<f64>)> {
        (0..self.grid.n)
            .filter_map(|j| {
                let u = self.state(j)?;
                let l = model.eigenvalues(u).ok()?;
                Some((self.grid.x(j), l.iter().copied().collect()))
            })
            .collect()
    }
}

fn bc_tolerances(model: &dyn Model1D, grid: &Grid1D) -> Vec<f64> {
    model
        .boundary()
        .right
        .iter()
        .map(|c| BC_TOL * grid.h() * c.scale.max(f64::MIN_POSITIVE))
        .collect()
}

/// Left branch from the (possibly parameterised) left boundary state.
pub fn left_branch(model: &dyn Model1D, alphas: &[f64], grid: &Grid1D) -> Result<Branch1D> {
    let u0 = model.boundary().left.state(alphas)?;
    propagate_through_sonic(model, &u0, grid, 0, grid.n - 1)
}

fn candidate_without_shock(model: &dyn Model1D, left: &Branch1D, alphas: &[f64]) -> SteadySolution1D {
    let grid = left.grid;
    let infeasible = (!left.completed()).then(|| format!("left branch stopped: {:?}", left.stop));
    let right_residuals = match left.state(grid.n - 1) {
        Some(u) => model.boundary().right_residuals(u),
        None => vec![f64::INFINITY; model.boundary().right.len()],
    };
    SteadySolution1D {
        grid,
        parameters: ParameterVector {
            alphas: alphas.to_vec(),
            ..Default::default()
        },
        left: left.clone(),
        shock: None,
        right: None,
        right_residuals,
        bc_tol: bc_tolerances(model, &grid),
        infeasible,
    }
}

/// Shock at node `j_s` of an existing left branch, then propagate to `x_R`.
/// `field` forces the shock family; `None` picks the smallest positive one.
pub fn shoot_from_branch(
    model: &dyn Model1D,
    left: &Branch1D,
    alphas: &[f64],
    j_s: usize,
    field: Option<usize>,
) -> SteadySolution1D {
    let grid = left.grid;
    let mut sol = candidate_without_shock(model, left, alphas);
    sol.infeasible = None;
    sol.right_residuals = vec![f64::INFINITY; model.boundary().right.len()];
    let Some(u_minus) = left.state(j_s) else {
        sol.infeasible = Some(format!("left branch invalid at node {j_s}"));
        return sol;
    };
    let jumped = match field {
        Some(k) => jump_in_field(model, u_minus, k),
        None => jump(model, u_minus),
    };
    let jr = match jumped {
        Ok(j) => j,
        Err(e) => {
            sol.infeasible = Some(format!("no admissible shock at x = {}: {e}", grid.x(j_s)));
            return sol;
        }
    };
    let right = match propagate_through_sonic(model, &jr.u_plus, &grid, j_s, grid.n - 1) {
        Ok(b) => b,
        Err(e) => {
            sol.infeasible = Some(e.to_string());
            return sol;
        }
    };
    if right.completed() {
        let u_r = right.state(grid.n - 1).expect("completed branch");
        sol.right_residuals = model.boundary().right_residuals(u_r);
    } else {
        sol.infeasible = Some(format!("post-shock branch stopped: {:?}", right.stop));
    }
    sol.parameters.x_s = Some(grid.x(j_s));
    sol.shock = Some(Shock {
        node: j_s,
        x_s: grid.x(j_s),
        jump: jr,
    });
    sol.right = Some(right);
    sol
}

/// Build the left branch for `alphas`, put a shock at the node nearest
/// `x_s`, and march to `x_R`.
pub fn shoot_with_shock(model: &dyn Model1D, alphas: &[f64], x_s: f64, grid: &Grid1D) -> Result<SteadySolution1D> {
    let left = left_branch(model, alphas, grid)?;
    Ok(shoot_from_branch(model, &left, alphas, grid.nearest(x_s), None))
}

/// Scalar residual used to place the shock: a right condition, or a
/// compatibility residual at a post-shock sonic point.
#[derive(Debug, Clone, Copy)]
enum ShockMatch {
    Right(usize),
    Compat(usize),
}

fn shock_residual(model: &dyn Model1D, sol: &SteadySolution1D, m: ShockMatch) -> (f64, f64) {
    let xr = sol.grid.x_right;
    if !sol.feasible() && !matches!(m, ShockMatch::Compat(_)) {
        return (f64::INFINITY, xr);
    }
    match m {
        ShockMatch::Right(c) => (sol.right_residuals[c], xr),
        ShockMatch::Compat(field) => match &sol.right {
            Some(r) => compat_at_star(model, r, field),
            None => (f64::INFINITY, xr),
        },
    }
}

/// `(P^-1 a)_field` at `x_*`: the branch's sonic point of that field if it
/// has one, otherwise its far end.
fn compat_at_star(model: &dyn Model1D, branch: &Branch1D, field: usize) -> (f64, f64) {
    if let Some(tp) = branch.turning_points.iter().find(|tp| tp.field == field) {
        return (tp.compat_residual, tp.x_t);
    }
    let end = branch.end();
    let x_star = if branch.direction > 0 {
        branch.grid.x_right
    } else {
        branch.grid.x_left
    };
    let u = branch.state(end).expect("branch start is valid");
    let r = compat_residual(model, u, x_star, field).unwrap_or(f64::INFINITY);
    (r, x_star)
}

/// Integer bisection for the shock node over `[lo, hi]`.
fn bisect_shock(
    model: &dyn Model1D,
    left: &Branch1D,
    alphas: &[f64],
    lo: usize,
    hi: usize,
    field: Option<usize>,
    m: ShockMatch,
) -> Result<SteadySolution1D> {
    let grid = left.grid;
    let eval = |j: usize| {
        let sol = shoot_from_branch(model, left, alphas, j, field);
        let (r, _) = shock_residual(model, &sol, m);
        (r, sol)
    };
    let (mut lo, mut hi) = (lo, hi);
    let same_sign = |a: f64, b: f64| (a > 0.0) == (b > 0.0) && a != 0.0 && b != 0.0;
    let usable = |a: f64, b: f64| a.is_finite() && b.is_finite() && !same_sign(a, b);
    let (mut r_lo, mut s_lo) = eval(lo);
    let (mut r_hi, mut s_hi) = eval(hi);
    debug!("shock bracket x = [{}, {}], residuals [{r_lo:e}, {r_hi:e}]", grid.x(lo), grid.x(hi));
    if !usable(r_lo, r_hi) {
        // An end of the bracket may be infeasible; look for a sign change
        // between completed candidates on a coarse subdivision.
        let nodes: Vec<usize> = (0..=SCAN).map(|i| lo + (hi - lo) * i / SCAN).collect();
        let mut prev = (lo, r_lo, s_lo);
        let mut found = None;
        for &j in nodes.iter().skip(1) {
            let cur = if j == hi { (hi, r_hi, s_hi.clone()) } else {
                let (r, s) = eval(j);
                (j, r, s)
            };
            if cur.0 > prev.0 && usable(prev.1, cur.1) {
                found = Some((prev, cur));
                break;
            }
            prev = cur;
        }
        let Some((a, b)) = found else {
            return Err(Error::NoSolutionInBracket {
                lo: grid.x(lo),
                hi: grid.x(hi),
            });
        };
        (lo, r_lo, s_lo) = a;
        (hi, r_hi, s_hi) = b;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let (r_mid, s_mid) = eval(mid);
        if !r_mid.is_finite() {
            return Err(Error::NoSolutionInBracket {
                lo: grid.x(lo),
                hi: grid.x(hi),
            });
        }
        if same_sign(r_mid, r_lo) {
            lo = mid;
            r_lo = r_mid;
            s_lo = s_mid;
        } else {
            hi = mid;
            r_hi = r_mid;
            s_hi = s_mid;
        }
    }
    // Prefer a completed candidate, then the smaller residual.
    let pick_lo = match (s_lo.feasible(), s_hi.feasible()) {
        (true, false) => true,
        (false, true) => false,
        _ => r_lo.abs() <= r_hi.abs(),
    };
    let sol = if pick_lo { s_lo } else { s_hi };
    match &sol.shock {
        Some(s) if s.jump.entropy_ok && sol.feasible() => Ok(sol),
        _ => Err(Error::NoSolutionInBracket {
            lo: grid.x(lo),
            hi: grid.x(hi),
        }),
    }
}

/// Find the shock node in `bracket = (x_lo, x_hi)` so that the first right
/// condition is met, to within one cell.
pub fn solve_shock_location(
    model: &dyn Model1D,
    alphas: &[f64],
    grid: &Grid1D,
    bracket: (f64, f64),
) -> Result<SteadySolution1D> {
    let left = left_branch(model, alphas, grid)?;
    solve_shock_on_branch(model, &left, alphas, bracket, None)
}

/// [`solve_shock_location`] on a precomputed left branch.
pub fn solve_shock_on_branch(
    model: &dyn Model1D,
    left: &Branch1D,
    alphas: &[f64],
    bracket: (f64, f64),
    field: Option<usize>,
) -> Result<SteadySolution1D> {
    let grid = left.grid;
    let (mut lo, mut hi) = (grid.nearest(bracket.0.min(bracket.1)), grid.nearest(bracket.0.max(bracket.1)));
    let last = left.end();
    hi = hi.min(last);
    lo = lo.min(hi);
    if lo == hi {
        return Err(Error::NoSolutionInBracket {
            lo: bracket.0,
            hi: bracket.1,
        });
    }
    let m = ShockMatch::Right(0);
    let mut sol = bisect_shock(model, left, alphas, lo, hi, field, m)?;
    let s = sol.shock.as_ref().expect("accepted solution has a shock");
    sol.parameters.bindings.push(Binding {
        unknown: "x_S".into(),
        matching: model.boundary().right[0].name.clone(),
        location: grid.x_right,
        bracket: (grid.x(lo), grid.x(hi)),
        value: s.x_s,
        residual: sol.right_residuals[0],
    });
    Ok(sol)
}

/// Search each sub-interval between consecutive `subdivision` points for a
/// shock and return every distinct admissible solution.
pub fn solve_multi(model: &dyn Model1D, grid: &Grid1D, subdivision: &[f64]) -> Result<Vec<SteadySolution1D>> {
    let left = left_branch(model, &[], grid)?;
    Ok(solve_multi_on_branch(model, &left, subdivision))
}

/// [`solve_multi`] on a precomputed left branch.
pub fn solve_multi_on_branch(model: &dyn Model1D, left: &Branch1D, subdivision: &[f64]) -> Vec<SteadySolution1D> {
    let grid = left.grid;
    let mut pts: Vec<f64> = subdivision.to_vec();
    pts.push(grid.x_left);
    pts.push(grid.x_right);
    pts.retain(|x| *x >= grid.x_left && *x <= grid.x_right);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 0.5 * grid.h());
    let mut out: Vec<SteadySolution1D> = Vec::new();
    for w in pts.windows(2) {
        match solve_shock_on_branch(model, left, &[], (w[0], w[1]), None) {
            Ok(sol) => {
                let node = sol.shock.as_ref().map(|s| s.node);
                if !out.iter().any(|o| o.shock.as_ref().map(|s| s.node) == node) {
                    info!("shock at x = {:?} in [{}, {}]", sol.parameters.x_s, w[0], w[1]);
                    out.push(sol);
                }
            }
            Err(e) => debug!("no shock in [{}, {}]: {e}", w[0], w[1]),
        }
    }
    out
}

/// Sub-intervals for [`solve_multi`] from the model's source switch points.
pub fn default_subdivision(model: &dyn Model1D) -> Vec<f64> {
    let (a, b) = model.domain();
    let mut pts = model.source_switch_points();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Options for [`solve_nested`].
#[derive(Debug, Clone, Default)]
pub struct NestedOptions {
    /// Brackets for the left-boundary parameters; defaults to +-50% of the
    /// model's seeds.
    pub alpha_brackets: Option<Vec<(f64, f64)>>,
    /// Relative width at which parameter bisection stops.
    pub alpha_tol: Option<f64>,
}

struct Nested<'a> {
    model: &'a dyn Model1D,
    grid: Grid1D,
    k: usize,
    n_alpha: usize,
    n_right: usize,
    brackets: Vec<(f64, f64)>,
    tol: f64,
}

/// What a parameter is matched against.
#[derive(Debug, Clone, Copy)]
enum AlphaMatch {
    Right(usize),
    /// Compatibility at a sonic point of this field on the left branch.
    CompatLeft(usize),
    /// Compatibility at a sonic point of this field anywhere on the solution.
    CompatAny(usize),
}

impl Nested<'_> {
    fn matching(&self, i: usize) -> AlphaMatch {
        if i >= self.k {
            AlphaMatch::CompatLeft(i)
        } else if i < self.n_right {
            AlphaMatch::Right(i)
        } else {
            AlphaMatch::CompatAny(i)
        }
    }

    fn describe(&self, m: AlphaMatch) -> String {
        match m {
            AlphaMatch::Right(c) => self.model.boundary().right[c].name.clone(),
            AlphaMatch::CompatLeft(f) | AlphaMatch::CompatAny(f) => format!("(P^-1 a)_{}", f + 1),
        }
    }

    fn eval_match(&self, m: AlphaMatch, sol: &SteadySolution1D) -> (f64, f64) {
        let xr = self.grid.x_right;
        match m {
            AlphaMatch::Right(c) => {
                if sol.feasible() {
                    (sol.right_residuals[c], xr)
                } else {
                    (f64::INFINITY, xr)
                }
            }
            AlphaMatch::CompatLeft(f) => compat_at_star(self.model, &sol.left, f),
            AlphaMatch::CompatAny(f) => {
                let tp = sol.turning_points().into_iter().find(|tp| tp.field == f);
                match tp {
                    Some(tp) => (tp.compat_residual, tp.x_t),
                    None => match &sol.right {
                        Some(r) => compat_at_star(self.model, r, f),
                        None => compat_at_star(self.model, &sol.left, f),
                    },
                }
            }
        }
    }

    /// Bisect parameter `i` given the fixed outer ones; `inner` completes the
    /// solve for the remaining unknowns.
    fn bisect_alpha<F>(&self, i: usize, alphas: &mut Vec<f64>, inner: F) -> Result<SteadySolution1D>
    where
        F: Fn(&Self, &mut Vec<f64>) -> Result<SteadySolution1D>,
    {
        let m = self.matching(i);
        let (mut lo, mut hi) = self.brackets[i];
        let eval = |a: f64, alphas: &mut Vec<f64>| -> (f64, f64, Option<SteadySolution1D>) {
            alphas.truncate(i);
            alphas.push(a);
            match inner(self, alphas) {
                Ok(sol) => {
                    let (r, x) = self.eval_match(m, &sol);
                    (r, x, Some(sol))
                }
                Err(e) => {
                    debug!("alpha_{} = {a}: {e}", i + 1);
                    (f64::NAN, f64::NAN, None)
                }
            }
        };
        let infeasible = |reason: String| Error::StructureInfeasible {
            unknown: format!("alpha_{}", i + 1),
            reason,
        };
        let (mut r_lo, _, mut s_lo) = eval(lo, alphas);
        let (mut r_hi, _, mut s_hi) = eval(hi, alphas);
        if r_lo.is_nan() || r_hi.is_nan() || (r_lo > 0.0) == (r_hi > 0.0) {
            return Err(infeasible(format!(
                "matching residual does not change sign on [{lo}, {hi}] ({r_lo:e}, {r_hi:e})"
            )));
        }
        let width = self.tol * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        for _ in 0..200 {
            if hi - lo <= width {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let (r_mid, _, s_mid) = eval(mid, alphas);
            if r_mid.is_nan() {
                return Err(infeasible(format!("inner solve failed at {mid}")));
            }
            if (r_mid > 0.0) == (r_lo > 0.0) {
                lo = mid;
                r_lo = r_mid;
                s_lo = s_mid;
            } else {
                hi = mid;
                r_hi = r_mid;
                s_hi = s_mid;
            }
        }
        // The matching function may jump (x_* switches between a sonic point
        // and x_R); keep the side whose solution reached the matching point
        // through a crossed sonic point, else the smaller residual.
        let score = |s: &Option<SteadySolution1D>| {
            s.as_ref().map_or(0, |s| {
                let crossed = s.turning_points().iter().any(|tp| tp.crossed) as u8;
                2 * s.feasible() as u8 + crossed
            })
        };
        let (a, r, s) = match score(&s_lo).cmp(&score(&s_hi)) {
            std::cmp::Ordering::Greater => (lo, r_lo, s_lo),
            std::cmp::Ordering::Less => (hi, r_hi, s_hi),
            std::cmp::Ordering::Equal if r_lo.abs() <= r_hi.abs() => (lo, r_lo, s_lo),
            _ => (hi, r_hi, s_hi),
        };
        let mut sol = s.ok_or_else(|| infeasible("no solution at the converged value".into()))?;
        let (_, loc) = self.eval_match(m, &sol);
        alphas.truncate(i);
        alphas.push(a);
        sol.parameters.bindings.insert(
            0,
            Binding {
                unknown: format!("alpha_{}", i + 1),
                matching: self.describe(m),
                location: loc,
                bracket: self.brackets[i],
                value: a,
                residual: r,
            },
        );
        Ok(sol)
    }

    /// Parameters `alpha_k .. alpha_I` (indices `from..I`), each matched at
    /// a sonic point of the left branch, innermost last. Returns the left
    /// branch as a shock-free candidate.
    fn inner_block(&self, from: usize, alphas: &mut Vec<f64>) -> Result<SteadySolution1D> {
        if from == self.n_alpha {
            let left = left_branch(self.model, alphas, &self.grid)?;
            return Ok(candidate_without_shock(self.model, &left, alphas));
        }
        self.bisect_alpha(from, alphas, move |s, a| s.inner_block(from + 1, a))
    }

    /// Inner block, then the shock location.
    fn block_and_shock(&self, alphas: &mut Vec<f64>) -> Result<SteadySolution1D> {
        let start = alphas.len();
        let pre = self.inner_block(start, alphas)?;
        let bindings = pre.parameters.bindings.clone();
        let left = pre.left;
        if !left.completed() {
            return Err(Error::StructureInfeasible {
                unknown: "x_S".into(),
                reason: format!("left branch stopped: {:?}", left.stop),
            });
        }
        // The shock must sit where lambda_k > 0: past the last sonic point
        // of field k on the left branch.
        let lo = left
            .turning_points
            .iter()
            .filter(|tp| tp.field == self.k && tp.crossed)
            .map(|tp| self.grid.nearest(tp.x_t) + 1)
            .max()
            .unwrap_or(0)
            .min(self.grid.n - 1);
        let hi = self.grid.n - 1;
        let m = if self.k + 1 == self.n_right {
            ShockMatch::Right(self.k)
        } else {
            ShockMatch::Compat(self.k)
        };
        let matching = match m {
            ShockMatch::Right(c) => self.model.boundary().right[c].name.clone(),
            ShockMatch::Compat(f) => format!("(P^-1 a)_{}", f + 1),
        };
        let mut sol = bisect_shock(self.model, &left, alphas, lo, hi, Some(self.k), m).map_err(|e| {
            Error::StructureInfeasible {
                unknown: "x_S".into(),
                reason: e.to_string(),
            }
        })?;
        let (res, loc) = shock_residual(self.model, &sol, m);
        sol.parameters.bindings = bindings;
        sol.parameters.bindings.push(Binding {
            unknown: "x_S".into(),
            matching,
            location: loc,
            bracket: (self.grid.x(lo), self.grid.x(hi)),
            value: sol.parameters.x_s.unwrap_or(f64::NAN),
            residual: res,
        });
        Ok(sol)
    }

    fn outer(&self, level: usize, alphas: &mut Vec<f64>) -> Result<SteadySolution1D> {
        if level == self.k.min(self.n_alpha) {
            return self.block_and_shock(alphas);
        }
        self.bisect_alpha(level, alphas, move |s, a| s.outer(level + 1, a))
    }
}

/// Resolve the missing left data and the shock location of a single
/// `k`-shock solution (`k` is the 0-based field). Parameters matched by
/// sonic-point compatibility are solved innermost, then the shock location,
/// then parameters matched by right conditions, each by bisection.
pub fn solve_nested(
    model: &dyn Model1D,
    grid: &Grid1D,
    k: usize,
    options: &NestedOptions,
) -> Result<SteadySolution1D> {
    let b = model.boundary();
    let n_alpha = b.left.free_parameters();
    let n_right = b.right.len();
    if k >= model.size() {
        return Err(Error::Config(format!("shock field {k} out of range")));
    }
    if n_right == 0 || k + 1 < n_right {
        return Err(Error::StructureInfeasible {
            unknown: "x_S".into(),
            reason: format!("a single shock in field {} cannot meet {n_right} right conditions", k + 1),
        });
    }
    if n_alpha + 1 < n_right {
        return Err(Error::StructureInfeasible {
            unknown: "x_S".into(),
            reason: format!("{n_alpha} free left parameters and {n_right} right conditions need several shocks"),
        });
    }
    if k > n_alpha {
        return Err(Error::StructureInfeasible {
            unknown: "x_S".into(),
            reason: format!("field {} has no free left parameter to reach a sonic point", k + 1),
        });
    }
    let brackets = match &options.alpha_brackets {
        Some(br) if br.len() == n_alpha => br.clone(),
        Some(br) => {
            return Err(Error::Config(format!("{} brackets given for {n_alpha} parameters", br.len())));
        }
        None => match &b.left {
            crate::systems::LeftBoundary::Family { seeds, .. } => seeds
                .iter()
                .map(|s| (s * (1.0 - SEED_BRACKET), s * (1.0 + SEED_BRACKET)))
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect(),
            _ => Vec::new(),
        },
    };
    let nested = Nested {
        model,
        grid: *grid,
        k,
        n_alpha,
        n_right,
        brackets,
        tol: options.alpha_tol.unwrap_or(1e-13),
    };
    let mut alphas = Vec::with_capacity(n_alpha);
    let mut sol = nested.outer(0, &mut alphas)?;
    sol.parameters.alphas = alphas;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{DuctArea, IsentropicDuct, Nozzle, Scalar1D};
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn burgers_jump_reflects() {
        let m = Scalar1D::burgers_hj();
        let j = jump(&m, &dvector![1.25]).unwrap();
        assert!((j.u_plus[0] + 1.25).abs() < 1e-12);
        assert!(j.entropy_ok);
        let e = jump(&m, &dvector![-1.0]).unwrap_err();
        assert!(matches!(e, Error::EntropyViolation { .. }));
    }

    #[test]
    fn isentropic_jump_matches_scalar_oracle() {
        let m = IsentropicDuct::single();
        let j = jump(&m, &dvector![1.0, 2.0]).unwrap();
        let rho = crate::numerics::bisect(|r| 4.0 / r + r.powf(1.4) - 5.0, 1.5, 10.0, 1e-13).unwrap();
        assert!((j.u_plus[0] - rho).abs() < 1e-9);
        assert!((j.u_plus[1] - 2.0).abs() < 1e-9);
        assert!((rho - 2.34).abs() < 0.01);
        assert_eq!(j.field, 0);
        assert!(j.rh_residual <= 1e-10 * 5.0);
    }

    #[test]
    fn strong_nozzle_shock_stays_on_its_locus() {
        // The fast path misses here and the continuation used to hop onto
        // another branch of the Hugoniot set near s = 0.
        let m = Nozzle::standard();
        let (rho, p) = (2.733820997274184, 1.449800058689378);
        let c = (m.gamma * p / rho).sqrt();
        let u = m.from_primitive(rho, 3.259785224227804 * c, p, 0.0);
        let j = jump(&m, &u).unwrap();
        assert!(j.entropy_ok);
        assert!(j.rh_residual <= 1e-10 * inf_norm(&m.flux(&u)));
    }

    #[test]
    fn burgers_shoot_residuals() {
        let m = Scalar1D::burgers_hj();
        let g = Grid1D::new(0.0, 1.0, 257).unwrap();
        let at_half = shoot_with_shock(&m, &[], 0.5, &g).unwrap();
        assert!(at_half.right_residuals[0].abs() < 4.0 * g.h());
        let early = shoot_with_shock(&m, &[], 0.25, &g).unwrap();
        // exact: 0.5 - x_S
        assert!((early.right_residuals[0] - 0.25).abs() < 4.0 * g.h());
    }

    #[test]
    fn burgers_shock_location() {
        for n in [65, 129, 257, 513] {
            let m = Scalar1D::burgers_hj();
            let g = Grid1D::new(0.0, 1.0, n).unwrap();
            let s = solve_shock_location(&m, &[], &g, (0.0, 1.0)).unwrap();
            let xs = s.parameters.x_s.unwrap();
            assert!((xs - 0.5).abs() <= g.h(), "n = {n}: {xs}");
            assert!(s.satisfies_right_bc());
        }
    }

    #[test]
    fn isentropic_single_shock() {
        let m = IsentropicDuct::single();
        let g = Grid1D::new(0.0, 1.0, 513).unwrap();
        let s = solve_shock_location(&m, &[], &g, (0.0, 1.0)).unwrap();
        assert!(s.satisfies_right_bc(), "{:?}", s.right_residuals);
        let sh = s.shock.as_ref().unwrap();
        assert_eq!(sh.jump.field, 0);
        assert!(sh.jump.lambda_minus[0] > 0.0 && sh.jump.lambda_plus[0] < 0.0);
        let multi = solve_multi(&m, &g, &default_subdivision(&m)).unwrap();
        assert_eq!(multi.len(), 1);
    }

    #[test]
    fn duct_multi_four_solutions() {
        let m = IsentropicDuct::multi();
        let g = Grid1D::new(0.0, 1.0, 513).unwrap();
        let sols = solve_multi(&m, &g, &default_subdivision(&m)).unwrap();
        assert_eq!(sols.len(), 4);
    }

    #[test]
    fn flat_duct_incompatible_has_no_solution() {
        let m = IsentropicDuct::new(
            "flat",
            1.4,
            1.0,
            DuctArea {
                mean: 1.0,
                amplitude: 0.0,
                frequency: 1.0,
            },
            1.0,
            2.0,
            2.0,
        );
        let g = Grid1D::new(0.0, 1.0, 129).unwrap();
        assert!(solve_multi(&m, &g, &default_subdivision(&m)).unwrap().is_empty());
        let e = solve_shock_location(&m, &[], &g, (0.0, 1.0)).unwrap_err();
        assert!(matches!(e, Error::NoSolutionInBracket { .. }));
    }

    #[test]
    fn nested_without_parameters_is_plain_bisection() {
        let m = IsentropicDuct::single();
        let g = Grid1D::new(0.0, 1.0, 257).unwrap();
        let a = solve_nested(&m, &g, 0, &NestedOptions::default()).unwrap();
        let b = solve_shock_location(&m, &[], &g, (0.0, 1.0)).unwrap();
        assert_eq!(a.shock.unwrap().node, b.shock.unwrap().node);
    }

    #[test]
    fn nozzle_nested_structure() {
        let m = Nozzle::standard();
        let g = Grid1D::for_model(&m, 401).unwrap();
        let s = solve_nested(&m, &g, 0, &NestedOptions::default()).unwrap();
        let tps = s.turning_points();
        assert_eq!(tps.len(), 1);
        assert!(tps[0].crossed && (tps[0].x_t - 1.5).abs() <= g.h());
        assert!(s.satisfies_right_bc(), "{:?} vs {:?}", s.right_residuals, s.bc_tol);
        let u_r = s.state(g.n - 1).unwrap();
        assert!((m.pressure(u_r, g.x_right) - 0.6784).abs() <= s.bc_tol[0]);
        let sh = s.shock.as_ref().unwrap();
        assert!(sh.x_s > 1.5);
        assert!(sh.jump.rh_residual <= 1e-10 * inf_norm(&m.flux(&sh.jump.u_minus)));
        // u - c: negative, sonic at the throat, positive up to the shock, negative after.
        for (x, l) in s.eigenvalue_trace(&m) {
            if x < 1.5 - 2.0 * g.h() || x > sh.x_s {
                assert!(l[0] < 0.0, "x = {x}: {l:?}");
            } else if x > 1.5 + 2.0 * g.h() && x <= sh.x_s {
                assert!(l[0] > 0.0, "x = {x}: {l:?}");
            }
        }
        assert_eq!(s.parameters.bindings.len(), 2);
        assert_eq!(s.parameters.bindings[0].unknown, "alpha_1");
        assert_eq!(s.parameters.bindings[1].unknown, "x_S");
    }

    #[test]
    fn nozzle_smooth_exit_pressure_needs_no_shock() {
        let base = Nozzle::standard();
        let g = Grid1D::for_model(&base, 201).unwrap();
        let s = solve_nested(&base, &g, 0, &NestedOptions::default()).unwrap();
        let smooth = s.left.state(g.n - 1).unwrap();
        let p_exit = base.pressure(smooth, g.x_right);
        let m = Nozzle::new(1.4, 8.3144, 1.5, 2.2, 3.0, 1.0, 300.0, p_exit, 5.0);
        match solve_nested(&m, &g, 0, &NestedOptions::default()) {
            Err(Error::StructureInfeasible { unknown, .. }) => assert_eq!(unknown, "x_S"),
            other => panic!("expected infeasible structure, got {:?}", other.map(|s| s.parameters)),
        }
    }

    #[test]
    fn restarts_agree_within_a_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let models: [Box<dyn Model1D>; 2] = [Box::new(Scalar1D::burgers_hj()), Box::new(IsentropicDuct::single())];
        for m in &models {
            let g = Grid1D::new(0.0, 1.0, 257).unwrap();
            let x0 = solve_shock_location(m.as_ref(), &[], &g, (0.0, 1.0))
                .unwrap()
                .parameters
                .x_s
                .unwrap();
            for _ in 0..20 {
                let lo = rng.random_range(0.0..x0 - 2.0 * g.h());
                let hi = rng.random_range(x0 + 2.0 * g.h()..1.0);
                let x = solve_shock_location(m.as_ref(), &[], &g, (lo, hi)).unwrap().parameters.x_s.unwrap();
                assert!((x - x0).abs() <= g.h() * 1.000001, "{} [{lo}, {hi}]: {x} vs {x0}", m.id());
            }
        }
    }

    #[test]
    fn no_sonic_point_after_shock_in_same_field() {
        let m = IsentropicDuct::single();
        let g = Grid1D::new(0.0, 1.0, 257).unwrap();
        let s = solve_shock_location(&m, &[], &g, (0.0, 1.0)).unwrap();
        let k = s.shock.as_ref().unwrap().jump.field;
        assert!(s.right.as_ref().unwrap().turning_points.iter().all(|tp| tp.field != k));
    }
}

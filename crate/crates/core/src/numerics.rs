//! Small dense Newton and bisection kernels shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Absolute tolerance on flux residuals, relative to `max(1, |V|_inf)`.
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub fn solve_linear(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let x = a.lu().solve(b)?;
    all_finite(&x).then_some(x)
}

/// Outcome of a damped Newton iteration.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton iteration on `F(x) = 0`.
///
/// `eval` returns the residual and Jacobian at `x`; `admissible` rejects
/// iterates outside the physical region (the step is halved until it
/// lands inside). Converges when `|F|_inf <= tol`.
pub fn newton<E, A>(
    mut x: DVector<f64>,
    tol: f64,
    max_iter: usize,
    mut eval: E,
    admissible: A,
) -> Result<NewtonOutcome>
where
    E: FnMut(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>),
    A: Fn(&DVector<f64>) -> bool,
{
    let (mut r, mut jac) = eval(&x);
    let mut res = inf_norm(&r);
    for it in 0..max_iter {
        if !res.is_finite() {
            return Err(Error::Inversion { residual: res });
        }
        if res <= tol {
            return Ok(NewtonOutcome {
                x,
                residual: res,
                iterations: it,
            });
        }
        let step = solve_linear(jac.clone(), &(-&r)).ok_or(Error::NearSonic)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &x + &step * lambda;
            if all_finite(&trial) && admissible(&trial) {
                let (rt, jt) = eval(&trial);
                let rn = inf_norm(&rt);
                // Accept any finite decrease; plain Newton when lambda = 1
                // and the residual is already small.
                if rn.is_finite() && (rn < res || lambda == 1.0 && rn < 10.0 * res.max(tol)) {
                    x = trial;
                    r = rt;
                    jac = jt;
                    res = rn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::Inversion { residual: res });
        }
    }
    if res <= tol {
        Ok(NewtonOutcome {
            x,
            residual: res,
            iterations: max_iter,
        })
    } else {
        Err(Error::Inversion { residual: res })
    }
}

/// Central finite-difference Jacobian of `f` at `x`.
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>, rel_step: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let h = rel_step * x[j].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let d = (f(&xp) - f(&xm)) / (2.0 * h);
        jac.set_column(j, &d);
    }
    jac
}

/// Bisection on a continuous scalar function. Returns the midpoint once the
/// bracket is no wider than `tol`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::dvector;

use super::{Conservation2D, Rect, Side, StateVector};

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type SourceFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// A scalar flux with its derivative and the points where the derivative
/// vanishes (used to take exact extrema over intervals).
#[derive(Clone)]
pub struct ScalarFlux {
    eval: Fn1,
    deriv: Fn1,
    critical_points: Vec<f64>,
}

impl fmt::Debug for ScalarFlux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFlux")
            .field("critical_points", &self.critical_points)
            .finish()
    }
}

impl ScalarFlux {
    pub fn new(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        critical_points: Vec<f64>,
    ) -> Self {
        ScalarFlux {
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            critical_points,
        }
    }

    /// `scale * u^2`.
    pub fn quadratic(scale: f64) -> Self {
        Self::new(move |u| scale * u * u, move |u| 2.0 * scale * u, vec![0.0])
    }

    pub fn linear() -> Self {
        Self::new(|u| u, |_| 1.0, Vec::new())
    }

    /// `u - u^3`.
    pub fn cubic() -> Self {
        let r = 1.0 / 3f64.sqrt();
        Self::new(|u| u - u * u * u, |u| 1.0 - 3.0 * u * u, vec![-r, r])
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.eval)(u)
    }

    pub fn deriv(&self, u: f64) -> f64 {
        (self.deriv)(u)
    }

    pub fn critical_points(&self) -> &[f64] {
        &self.critical_points
    }
}

/// Scalar balance law `f(u)_x + g(u)_y = a(u, x, y)` on a rectangle with
/// optional Dirichlet data on each side.
#[derive(Clone)]
pub struct Scalar2D {
    id: String,
    pub f: ScalarFlux,
    pub g: ScalarFlux,
    source: Option<SourceFn>,
    domain: Rect,
    sides: [Option<Field>; 4],
    exact: Option<Field>,
    params: BTreeMap<String, f64>,
}

impl fmt::Debug for Scalar2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scalar2D")
            .field("id", &self.id)
            .field("domain", &self.domain)
            .finish()
    }
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
        Side::Bottom => 2,
        Side::Top => 3,
    }
}

impl Scalar2D {
    pub fn new(id: impl Into<String>, f: ScalarFlux, g: ScalarFlux, domain: Rect) -> Self {
        Scalar2D {
            id: id.into(),
            f,
            g,
            source: None,
            domain,
            sides: [None, None, None, None],
            exact: None,
            params: BTreeMap::new(),
        }
    }

    pub fn with_source(mut self, a: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(a));
        self
    }

    pub fn with_side(mut self, side: Side, data: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.sides[side_index(side)] = Some(Arc::new(data));
        self
    }

    pub fn with_exact(mut self, exact: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(exact));
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    /// `(u^2/2)_x + u_y = 0` with `u(0,y) = 1.5`, `u(1,y) = -0.5`,
    /// `u(x,0) = 1.5 - 2x`; a shock forms at `y = 1/2`.
    pub fn scalar_shock() -> Self {
        Scalar2D::new(
            "scalar2d",
            ScalarFlux::quadratic(0.5),
            ScalarFlux::linear(),
            Rect {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            },
        )
        .with_side(Side::Left, |_, _| 1.5)
        .with_side(Side::Right, |_, _| -0.5)
        .with_side(Side::Bottom, |x, _| 1.5 - 2.0 * x)
        .with_exact(scalar_shock_exact)
    }

    /// `(k u^2)_x + (u - u^3)_y = 0` with three boundary states. `alpha` is
    /// the slope of the left/bottom shock; `k = (1 - u_L^2) / (alpha u_L)` is
    /// derived from it. The top boundary switches from `u_L` to `-u_L` at
    /// `x = split`.
    pub fn three_states(alpha: f64, u_left: f64, split: f64, perturbed: bool) -> Self {
        let k = (1.0 - u_left * u_left) / (alpha * u_left);
        let left = move |y: f64| {
            if perturbed {
                u_left + 0.2 * (PI * y).sin()
            } else {
                u_left
            }
        };
        let top_left = left(1.0);
        let id = if perturbed {
            "three_states_perturbed"
        } else {
            "three_states"
        };
        let mut model = Scalar2D::new(
            id,
            ScalarFlux::quadratic(k),
            ScalarFlux::cubic(),
            Rect {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            },
        )
        .with_side(Side::Bottom, |_, _| 0.0)
        .with_side(Side::Left, move |_, y| left(y))
        .with_side(Side::Right, move |_, y| -left(y))
        .with_side(Side::Top, move |x, _| if x < split { top_left } else { -top_left })
        .with_param("alpha", alpha)
        .with_param("u_left", u_left)
        .with_param("k", k)
        .with_param("split", split)
        .with_param("perturbed", if perturbed { 1.0 } else { 0.0 });
        if !perturbed {
            model = model.with_exact(move |x, y| {
                if y <= (alpha * x).min(alpha * (1.0 - x)) {
                    0.0
                } else if x < split {
                    u_left
                } else {
                    -u_left
                }
            });
        }
        model
    }

    /// 2D Burgers `(u^2/2)_x + (u^2/2)_y = u (1 - phi') psi'(y - phi)` with
    /// `phi = 0.5 + 0.5 cos(pi x)`, `psi(z) = -sin(pi z)`; the exact
    /// solution is `2 + psi` below `y = phi(x)` and `-2 + psi` above.
    pub fn burgers() -> Self {
        let exact = burgers_exact;
        Scalar2D::new(
            "burgers2d",
            ScalarFlux::quadratic(0.5),
            ScalarFlux::quadratic(0.5),
            Rect {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            },
        )
        .with_source(|u, x, y| {
            let dphi = -0.5 * PI * (PI * x).sin();
            let dpsi = -PI * (PI * (y - burgers_phi(x))).cos();
            u * (1.0 - dphi) * dpsi
        })
        .with_side(Side::Left, exact)
        .with_side(Side::Right, exact)
        .with_side(Side::Bottom, exact)
        .with_side(Side::Top, exact)
        .with_exact(exact)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        self.params.clone()
    }

    pub fn source_at(&self, u: f64, x: f64, y: f64) -> f64 {
        self.source.as_ref().map_or(0.0, |a| a(u, x, y))
    }

    pub fn has_source(&self) -> bool {
        self.source.is_some()
    }

    pub fn side_data(&self, side: Side, x: f64, y: f64) -> Option<f64> {
        self.sides[side_index(side)].as_ref().map(|d| d(x, y))
    }

    pub fn has_side_data(&self, side: Side) -> bool {
        self.sides[side_index(side)].is_some()
    }

    pub fn exact(&self, x: f64, y: f64) -> Option<f64> {
        self.exact.as_ref().map(|e| e(x, y))
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }
}

pub fn burgers_phi(x: f64) -> f64 {
    0.5 + 0.5 * (PI * x).cos()
}

fn burgers_exact(x: f64, y: f64) -> f64 {
    let psi = -(PI * (y - burgers_phi(x))).sin();
    if y < burgers_phi(x) {
        2.0 + psi
    } else {
        -2.0 + psi
    }
}

/// Characteristics `x = x0 + (1.5 - 2 x0) y` focus at `(0.75, 0.5)`; above
/// that a shock with speed `dx/dy = 1/2` separates `1.5` from `-0.5`.
fn scalar_shock_exact(x: f64, y: f64) -> f64 {
    if y < 0.5 {
        if x <= 1.5 * y {
            1.5
        } else if x >= 1.0 - 0.5 * y {
            -0.5
        } else {
            (1.5 - 2.0 * x) / (1.0 - 2.0 * y)
        }
    } else if x < 0.75 + 0.5 * (y - 0.5) {
        1.5
    } else {
        -0.5
    }
}

impl Conservation2D for Scalar2D {
    fn id(&self) -> &str {
        &self.id
    }

    fn size(&self) -> usize {
        1
    }

    fn domain(&self) -> Rect {
        self.domain
    }

    fn flux_f(&self, u: &StateVector) -> StateVector {
        dvector![self.f.eval(u[0])]
    }

    fn flux_g(&self, u: &StateVector) -> StateVector {
        dvector![self.g.eval(u[0])]
    }

    fn source(&self, u: &StateVector, x: f64, y: f64) -> StateVector {
        dvector![self.source_at(u[0], x, y)]
    }

    fn max_speeds(&self, u: &StateVector) -> (f64, f64) {
        (self.f.deriv(u[0]).abs(), self.g.deriv(u[0]).abs())
    }

    fn ghost(&self, side: Side, interior: &StateVector, x: f64, y: f64) -> StateVector {
        match self.side_data(side, x, y) {
            Some(v) => dvector![v],
            None => interior.clone(),
        }
    }

    fn initial_state(&self, x: f64, y: f64) -> StateVector {
        let r = self.domain;
        let tx = (x - r.x0) / (r.x1 - r.x0);
        let ty = (y - r.y0) / (r.y1 - r.y0);
        let l = self.side_data(Side::Left, r.x0, y);
        let rr = self.side_data(Side::Right, r.x1, y);
        let b = self.side_data(Side::Bottom, x, r.y0);
        let t = self.side_data(Side::Top, x, r.y1);
        let v = match (l, rr, b, t) {
            (Some(l), Some(rr), _, _) => (1.0 - tx) * l + tx * rr,
            (_, _, Some(b), Some(t)) => (1.0 - ty) * b + ty * t,
            (Some(v), _, _, _) | (_, Some(v), _, _) | (_, _, Some(v), _) | (_, _, _, Some(v)) => v,
            _ => 0.0,
        };
        dvector![v]
    }
}

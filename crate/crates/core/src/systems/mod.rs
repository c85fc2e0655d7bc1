//! Conservation-law models: the abstract 1D/2D interfaces and the built-in
//! benchmark problems.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{self, all_finite, inf_norm, NEWTON_MAX_ITER, NEWTON_TOL};

mod euler2d;
mod isentropic;
mod nozzle;
pub mod registry;
mod scalar1d;
mod scalar2d;

pub use euler2d::{Euler2D, Primitive2D};
pub use isentropic::{DuctArea, IsentropicDuct};
pub use nozzle::Nozzle;
pub use registry::{build_model, list_models, ModelInfo, Problem};
pub use scalar1d::Scalar1D;
pub use scalar2d::{burgers_phi, ScalarFlux, Scalar2D};

pub type StateVector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub type StateMap = Arc<dyn Fn(&[f64]) -> StateVector + Send + Sync>;
pub type ScalarCondition = Arc<dyn Fn(&StateVector) -> f64 + Send + Sync>;
pub type GhostMap = Arc<dyn Fn(&StateVector) -> StateVector + Send + Sync>;

/// Eigen-structure of a flux Jacobian: `left * J * right = diag(values)`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    /// Columns are right eigenvectors (`P`).
    pub right: Matrix,
    /// Rows are left eigenvectors (`P^-1`).
    pub left: Matrix,
}

/// Data prescribed at `x_L`: either the full state or a family with `I`
/// free parameters.
#[derive(Clone)]
pub enum LeftBoundary {
    Full(StateVector),
    Family {
        count: usize,
        map: StateMap,
        /// Seed values for the free parameters; brackets default to +-50%.
        seeds: Vec<f64>,
    },
}

impl LeftBoundary {
    pub fn free_parameters(&self) -> usize {
        match self {
            LeftBoundary::Full(_) => 0,
            LeftBoundary::Family { count, .. } => *count,
        }
    }

    pub fn state(&self, alphas: &[f64]) -> Result<StateVector> {
        match self {
            LeftBoundary::Full(u) => {
                if !alphas.is_empty() {
                    return Err(Error::Config(format!(
                        "left boundary is fully prescribed but {} parameters were given",
                        alphas.len()
                    )));
                }
                Ok(u.clone())
            }
            LeftBoundary::Family { count, map, .. } => {
                if alphas.len() != *count {
                    return Err(Error::Config(format!(
                        "left boundary expects {count} parameters, got {}",
                        alphas.len()
                    )));
                }
                Ok(map(alphas))
            }
        }
    }
}

impl fmt::Debug for LeftBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LeftBoundary::Full(u) => f.debug_tuple("Full").field(&u.as_slice()).finish(),
            LeftBoundary::Family { count, seeds, .. } => f
                .debug_struct("Family")
                .field("count", count)
                .field("seeds", seeds)
                .finish(),
        }
    }
}

/// One scalar condition `B_R^k(U) = 0` at the right boundary.
#[derive(Clone)]
pub struct RightCondition {
    pub name: String,
    pub eval: ScalarCondition,
    /// Magnitude used to scale the boundary tolerance.
    pub scale: f64,
}

impl fmt::Debug for RightCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RightCondition")
            .field("name", &self.name)
            .field("scale", &self.scale)
            .finish()
    }
}

/// Boundary data of a 1D problem.
///
/// `left`/`right` drive the sweeping solver. The ghost maps produce the
/// Dirichlet-type boundary states used by time evolution (prescribed
/// components fixed, the rest extrapolated from the adjacent interior
/// state), and the reference states seed its initial condition.
#[derive(Clone)]
pub struct BoundarySpec {
    pub left: LeftBoundary,
    pub right: Vec<RightCondition>,
    pub left_ghost: GhostMap,
    pub right_ghost: GhostMap,
    pub left_reference: StateVector,
    pub right_reference: StateVector,
}

impl fmt::Debug for BoundarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundarySpec")
            .field("left", &self.left)
            .field("right", &self.right)
            .finish()
    }
}

impl BoundarySpec {
    pub fn right_residuals(&self, u: &StateVector) -> Vec<f64> {
        self.right.iter().map(|c| (c.eval)(u)).collect()
    }
}

/// A 1D balance law `f(U)_x = a(U, x)` on `[x_L, x_R]`.
pub trait Model1D: Send + Sync {
    fn id(&self) -> &str;
    fn size(&self) -> usize;
    fn domain(&self) -> (f64, f64);
    fn flux(&self, u: &StateVector) -> StateVector;
    fn jacobian(&self, u: &StateVector) -> Matrix;
    fn source(&self, u: &StateVector, x: f64) -> StateVector;
    /// Closed-form eigen-structure, eigenvalues ascending.
    fn eigen(&self, u: &StateVector) -> Result<Eigen>;
    fn boundary(&self) -> &BoundarySpec;
    fn params(&self) -> BTreeMap<String, f64>;

    fn eigenvalues(&self, u: &StateVector) -> Result<DVector<f64>> {
        Ok(self.eigen(u)?.values)
    }

    /// Whether `u` lies in the physical (hyperbolic) region.
    fn admissible(&self, u: &StateVector) -> bool {
        all_finite(u)
    }

    /// Points where the source changes sign independently of the state
    /// (zeros of `A'` for ducts); these split multi-solution searches.
    fn source_switch_points(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Typical magnitude of each component, used for relative comparisons.
    fn component_scales(&self) -> Vec<f64> {
        vec![1.0; self.size()]
    }
}

fn check_state(model: &dyn Model1D, u: &StateVector) -> Result<()> {
    if u.len() != model.size() {
        return Err(Error::Domain(format!(
            "state has {} components, model {} expects {}",
            u.len(),
            model.id(),
            model.size()
        )));
    }
    if !all_finite(u) {
        return Err(Error::Domain(format!("{:?}", u.as_slice())));
    }
    Ok(())
}

/// `f(U)`, rejecting non-finite input.
pub fn eval_flux(model: &dyn Model1D, u: &StateVector) -> Result<StateVector> {
    check_state(model, u)?;
    Ok(model.flux(u))
}

/// Eigenvalues (ascending) with right/left eigenvector matrices.
pub fn eval_eigen(model: &dyn Model1D, u: &StateVector) -> Result<Eigen> {
    check_state(model, u)?;
    if !model.admissible(u) {
        return Err(Error::Hyperbolicity(format!(
            "state {:?} outside the hyperbolic region of {}",
            u.as_slice(),
            model.id()
        )));
    }
    model.eigen(u)
}

/// Flux inversion tolerance for a target flux value.
pub fn flux_tol(v: &StateVector) -> f64 {
    NEWTON_TOL * inf_norm(v).max(1.0)
}

/// Solve `f(U) = V` by Newton's method warm-started from `guess`.
pub fn invert_flux(model: &dyn Model1D, v: &StateVector, guess: &StateVector) -> Result<StateVector> {
    check_state(model, guess)?;
    if !all_finite(v) {
        return Err(Error::Domain(format!("target flux {:?}", v.as_slice())));
    }
    let tol = flux_tol(v);
    numerics::newton(
        guess.clone(),
        tol,
        NEWTON_MAX_ITER,
        |u| (model.flux(u) - v, model.jacobian(u)),
        |u| model.admissible(u),
    )
    .map(|o| o.x)
}

/// Index of the eigenvalue closest to zero, and its value.
pub fn nearest_sonic_field(values: &DVector<f64>) -> (usize, f64) {
    values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap_or((0, f64::NAN))
}

/// Index of the smallest positive eigenvalue, if any.
pub fn smallest_positive_field(values: &DVector<f64>) -> Option<usize> {
    values
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, l)| *l > 0.0)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Side of a rectangular 2D domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    /// `+1` when sweeping from this side moves in the positive coordinate
    /// direction.
    pub fn direction(self) -> f64 {
        match self {
            Side::Left | Side::Bottom => 1.0,
            Side::Right | Side::Top => -1.0,
        }
    }

    /// Whether the marching axis is `x`.
    pub fn marches_in_x(self) -> bool {
        matches!(self, Side::Left | Side::Right)
    }
}

/// Rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// Boundary treatment for one side of a 2D system.
#[derive(Clone)]
pub enum SideCondition {
    /// Full state prescribed as a function of `(x, y)`.
    State(Arc<dyn Fn(f64, f64) -> StateVector + Send + Sync>),
    /// Slip wall: the normal velocity is reflected.
    Reflect,
    /// Nothing prescribed; values are extrapolated.
    Free,
}

impl fmt::Debug for SideCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SideCondition::State(_) => f.write_str("State"),
            SideCondition::Reflect => f.write_str("Reflect"),
            SideCondition::Free => f.write_str("Free"),
        }
    }
}

/// A 2D balance law `f(U)_x + g(U)_y = a(U, x, y)`, the common surface used
/// by time evolution. Scalar models expose themselves through it with
/// one-component states.
pub trait Conservation2D: Send + Sync {
    fn id(&self) -> &str;
    fn size(&self) -> usize;
    fn domain(&self) -> Rect;
    fn flux_f(&self, u: &StateVector) -> StateVector;
    fn flux_g(&self, u: &StateVector) -> StateVector;
    fn source(&self, u: &StateVector, x: f64, y: f64) -> StateVector;
    /// Largest characteristic speed magnitude in `x` and in `y`.
    fn max_speeds(&self, u: &StateVector) -> (f64, f64);
    /// Boundary ghost state for `side` at `(x, y)` given the adjacent
    /// interior state.
    fn ghost(&self, side: Side, interior: &StateVector, x: f64, y: f64) -> StateVector;
    fn admissible(&self, u: &StateVector) -> bool {
        all_finite(u)
    }
    /// Initial guess for time evolution.
    fn initial_state(&self, x: f64, y: f64) -> StateVector;
    /// Typical magnitude of each component, used for relative comparisons.
    fn component_scales(&self) -> Vec<f64> {
        vec![1.0; self.size()]
    }
}

/// A 2D system that can be swept in the paraxial form.
pub trait System2D: Conservation2D {
    fn jacobian_f(&self, u: &StateVector) -> Matrix;
    fn jacobian_g(&self, u: &StateVector) -> Matrix;
    fn eigen_f(&self, u: &StateVector) -> Result<Eigen>;
    fn eigen_g(&self, u: &StateVector) -> Result<Eigen>;
    /// Spectral radius of the paraxial Jacobian: `grad g (grad f)^-1` when
    /// marching in `x`, `grad f (grad g)^-1` when marching in `y`.
    fn paraxial_radius(&self, u: &StateVector, marches_in_x: bool) -> Result<f64>;
    fn side_condition(&self, side: Side) -> &SideCondition;
    /// Mirror state across a slip wall on `side`.
    fn reflect(&self, u: &StateVector, side: Side) -> StateVector;
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn one_d_models() -> Vec<Box<dyn Model1D>> {
        vec![
            Box::new(Scalar1D::burgers_hj()),
            Box::new(IsentropicDuct::single()),
            Box::new(IsentropicDuct::multi()),
            Box::new(Nozzle::standard()),
        ]
    }

    #[test]
    fn isentropic_flux_and_eigen() {
        let m = IsentropicDuct::single();
        let u = dvector![1.0, 2.0];
        let f = eval_flux(&m, &u).unwrap();
        assert!((f[0] - 2.0).abs() < 1e-15 && (f[1] - 5.0).abs() < 1e-14);
        let e = eval_eigen(&m, &u).unwrap();
        let s = 1.4f64.sqrt();
        assert!((e.values[0] - (2.0 - s)).abs() < 1e-14);
        assert!((e.values[1] - (2.0 + s)).abs() < 1e-14);
        assert!((&e.right * &e.left - Matrix::identity(2, 2)).amax() < 1e-10);
        let back = invert_flux(&m, &f, &dvector![1.1, 1.9]).unwrap();
        assert!((back - u).amax() < 1e-10);
    }

    #[test]
    fn scalar_flux_eigen_and_basins() {
        let m = Scalar1D::burgers_hj();
        assert_eq!(eval_flux(&m, &dvector![1.0]).unwrap()[0], 1.0);
        assert_eq!(eval_eigen(&m, &dvector![-1.0]).unwrap().values[0], -2.0);
        let plus = invert_flux(&m, &dvector![1.0], &dvector![0.9]).unwrap();
        let minus = invert_flux(&m, &dvector![1.0], &dvector![-0.9]).unwrap();
        assert!((plus[0] - 1.0).abs() < 1e-12);
        assert!((minus[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn nozzle_rest_state_and_eigenvalues() {
        let m = Nozzle::standard();
        let x = 0.7;
        let u0 = m.from_primitive(1.0, 0.0, 0.8, x);
        let f = eval_flux(&m, &u0).unwrap();
        assert_eq!(f[0], 0.0);
        assert!((f[1] - 0.8 * m.area(x)).abs() < 1e-14);
        assert_eq!(f[2], 0.0);
        // c = 1 with rho = gamma, p = 1
        let u = m.from_primitive(1.4, 2.0, 1.0, x);
        let e = eval_eigen(&m, &u).unwrap();
        for (got, want) in e.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_state_is_domain_error() {
        let m = IsentropicDuct::single();
        assert!(matches!(eval_flux(&m, &dvector![f64::NAN, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(eval_eigen(&m, &dvector![-1.0, 1.0]), Err(Error::Hyperbolicity(_))));
    }

    #[test]
    fn eigen_diagonalizes_all_models() {
        let states: Vec<(usize, StateVector)> = vec![
            (0, dvector![0.7]),
            (1, dvector![1.3, 2.1]),
            (2, dvector![2.2, 1.7]),
            (3, Nozzle::standard().from_primitive(0.4, 30.0, 0.9, 1.2)),
        ];
        let models = one_d_models();
        for (i, u) in states {
            let m = &models[i];
            let j = m.jacobian(&u);
            let e = eval_eigen(m.as_ref(), &u).unwrap();
            let d = &e.left * &j * &e.right - Matrix::from_diagonal(&e.values);
            assert!(d.amax() <= 1e-8 * j.amax(), "{}", m.id());
            assert!((&e.right * &e.left - Matrix::identity(m.size(), m.size())).amax() < 1e-10);
        }
    }
}

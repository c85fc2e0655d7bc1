use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{dmatrix, dvector};

use super::{BoundarySpec, Eigen, LeftBoundary, Matrix, Model1D, RightCondition, StateVector};
use crate::error::{Error, Result};

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Scalar balance law `f(v)_x = a(v, x)` with Dirichlet data at both ends.
#[derive(Clone)]
pub struct Scalar1D {
    id: String,
    flux: Fn1,
    dflux: Fn1,
    source: Fn2,
    domain: (f64, f64),
    boundary: BoundarySpec,
    params: BTreeMap<String, f64>,
}

impl std::fmt::Debug for Scalar1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scalar1D")
            .field("id", &self.id)
            .field("domain", &self.domain)
            .finish()
    }
}

impl Scalar1D {
    /// Builds a scalar model from closures; `v_left`/`v_right` are the
    /// boundary values (the right one becomes `B_R(v) = v - v_right`).
    pub fn new(
        id: impl Into<String>,
        flux: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dflux: impl Fn(f64) -> f64 + Send + Sync + 'static,
        source: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        domain: (f64, f64),
        v_left: f64,
        v_right: f64,
    ) -> Self {
        let boundary = BoundarySpec {
            left: LeftBoundary::Full(dvector![v_left]),
            right: vec![RightCondition {
                name: "v(x_R) - v_R".into(),
                eval: Arc::new(move |u: &StateVector| u[0] - v_right),
                scale: v_right.abs().max(1.0),
            }],
            left_ghost: Arc::new(move |_| dvector![v_left]),
            right_ghost: Arc::new(move |_| dvector![v_right]),
            left_reference: dvector![v_left],
            right_reference: dvector![v_right],
        };
        let mut params = BTreeMap::new();
        params.insert("v_left".into(), v_left);
        params.insert("v_right".into(), v_right);
        Scalar1D {
            id: id.into(),
            flux: Arc::new(flux),
            dflux: Arc::new(dflux),
            source: Arc::new(source),
            domain,
            boundary,
            params,
        }
    }

    /// `(v^2)_x = v` on `[0, 1]`, `v(0) = 1`, `v(1) = -1`: the derivative of
    /// the 1D eikonal problem `(u_x)^2 = u`.
    pub fn burgers_hj() -> Self {
        Self::new(
            "burgers1d_hj",
            |v| v * v,
            |v| 2.0 * v,
            |v, _| v,
            (0.0, 1.0),
            1.0,
            -1.0,
        )
    }

    /// Exact left branch of [`Scalar1D::burgers_hj`].
    pub fn burgers_hj_left_exact(x: f64) -> f64 {
        0.5 * x + 1.0
    }

    /// Exact right branch of [`Scalar1D::burgers_hj`].
    pub fn burgers_hj_right_exact(x: f64) -> f64 {
        0.5 * x - 1.5
    }

    pub fn flux_scalar(&self, v: f64) -> f64 {
        (self.flux)(v)
    }

    pub fn dflux_scalar(&self, v: f64) -> f64 {
        (self.dflux)(v)
    }
}

impl Model1D for Scalar1D {
    fn id(&self) -> &str {
        &self.id
    }

    fn size(&self) -> usize {
        1
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn flux(&self, u: &StateVector) -> StateVector {
        dvector![(self.flux)(u[0])]
    }

    fn jacobian(&self, u: &StateVector) -> Matrix {
        dmatrix![(self.dflux)(u[0])]
    }

    fn source(&self, u: &StateVector, x: f64) -> StateVector {
        dvector![(self.source)(u[0], x)]
    }

    fn eigen(&self, u: &StateVector) -> Result<Eigen> {
        let l = (self.dflux)(u[0]);
        if !l.is_finite() {
            return Err(Error::Hyperbolicity(format!("f'({}) = {l}", u[0])));
        }
        Ok(Eigen {
            values: dvector![l],
            right: dmatrix![1.0],
            left: dmatrix![1.0],
        })
    }

    fn boundary(&self) -> &BoundarySpec {
        &self.boundary
    }

    fn params(&self) -> BTreeMap<String, f64> {
        self.params.clone()
    }
}

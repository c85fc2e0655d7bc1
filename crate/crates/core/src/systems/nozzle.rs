use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{dmatrix, dvector};

use super::{BoundarySpec, Eigen, LeftBoundary, Matrix, Model1D, RightCondition, StateVector};
use crate::error::{Error, Result};

/// Quasi-1D Euler flow in a converging-diverging nozzle with area
/// `A(x) = 1 + throat_coef (x - throat)^2` on `[0, length]`.
///
/// The conserved state is `(rho A, rho u A, E A)`. Because the Euler flux is
/// homogeneous of degree one, the flux `(rho u A, (rho u^2 + p) A,
/// u A (E + p))` is the plain Euler flux of the scaled state, so the area
/// only enters through the source `(0, p A', 0)`.
#[derive(Debug, Clone)]
pub struct Nozzle {
    pub gamma: f64,
    pub gas_constant: f64,
    pub throat: f64,
    pub throat_coef: f64,
    pub length: f64,
    pub p_left: f64,
    pub t_left: f64,
    pub p_right: f64,
    /// Seed for the unknown inflow velocity.
    pub velocity_seed: f64,
    boundary: BoundarySpec,
}

impl Nozzle {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        gamma: f64,
        gas_constant: f64,
        throat: f64,
        throat_coef: f64,
        length: f64,
        p_left: f64,
        t_left: f64,
        p_right: f64,
        velocity_seed: f64,
    ) -> Self {
        let area = move |x: f64| 1.0 + throat_coef * (x - throat) * (x - throat);
        let rho_left = p_left / (gas_constant * t_left);
        let a0 = area(0.0);
        let a1 = area(length);
        let scaled = move |rho: f64, u: f64, p: f64, a: f64| {
            dvector![rho * a, rho * u * a, (p / (gamma - 1.0) + 0.5 * rho * u * u) * a]
        };
        let pressure_of = move |u: &StateVector, a: f64| {
            (gamma - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0]) / a
        };
        let boundary = BoundarySpec {
            left: LeftBoundary::Family {
                count: 1,
                map: Arc::new(move |alpha: &[f64]| scaled(rho_left, alpha[0], p_left, a0)),
                seeds: vec![velocity_seed],
            },
            right: vec![RightCondition {
                name: "p(x_R) - p_R".into(),
                eval: Arc::new(move |u: &StateVector| pressure_of(u, a1) - p_right),
                scale: p_right.abs(),
            }],
            left_ghost: Arc::new(move |interior: &StateVector| {
                let vel = interior[1] / interior[0];
                scaled(rho_left, vel, p_left, a0)
            }),
            right_ghost: Arc::new(move |interior: &StateVector| {
                let rho = interior[0] / a1;
                let vel = interior[1] / interior[0];
                scaled(rho, vel, p_right, a1)
            }),
            left_reference: scaled(rho_left, velocity_seed, p_left, a0),
            right_reference: scaled(rho_left, velocity_seed * a0 / a1, p_right, a1),
        };
        Nozzle {
            gamma,
            gas_constant,
            throat,
            throat_coef,
            length,
            p_left,
            t_left,
            p_right,
            velocity_seed,
            boundary,
        }
    }

    /// `A(x) = 1 + 2.2 (x - 1.5)^2` on `[0, 3]`, `gamma = 1.4`,
    /// `R = 8.3144`, `p_L = 1`, `T_L = 300`, `p_R = 0.6784`.
    pub fn standard() -> Self {
        Self::new(1.4, 8.3144, 1.5, 2.2, 3.0, 1.0, 300.0, 0.6784, 5.0)
    }

    pub fn area(&self, x: f64) -> f64 {
        1.0 + self.throat_coef * (x - self.throat).powi(2)
    }

    pub fn area_slope(&self, x: f64) -> f64 {
        2.0 * self.throat_coef * (x - self.throat)
    }

    /// `p A` of a scaled state.
    fn scaled_pressure(&self, u: &StateVector) -> f64 {
        (self.gamma - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0])
    }

    /// Physical pressure at `x`.
    pub fn pressure(&self, u: &StateVector, x: f64) -> f64 {
        self.scaled_pressure(u) / self.area(x)
    }

    pub fn velocity(&self, u: &StateVector) -> f64 {
        u[1] / u[0]
    }

    pub fn sound_speed(&self, u: &StateVector) -> f64 {
        (self.gamma * self.scaled_pressure(u) / u[0]).sqrt()
    }

    pub fn rho_left(&self) -> f64 {
        self.p_left / (self.gas_constant * self.t_left)
    }

    /// Scaled state from primitive `(rho, u, p)` at `x`.
    pub fn from_primitive(&self, rho: f64, u: f64, p: f64, x: f64) -> StateVector {
        let a = self.area(x);
        dvector![rho * a, rho * u * a, (p / (self.gamma - 1.0) + 0.5 * rho * u * u) * a]
    }
}

impl Model1D for Nozzle {
    fn id(&self) -> &str {
        "nozzle"
    }

    fn size(&self) -> usize {
        3
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, self.length)
    }

    fn flux(&self, u: &StateVector) -> StateVector {
        let vel = u[1] / u[0];
        let p = self.scaled_pressure(u);
        dvector![u[1], u[1] * vel + p, vel * (u[2] + p)]
    }

    fn jacobian(&self, u: &StateVector) -> Matrix {
        let g = self.gamma;
        let vel = u[1] / u[0];
        let e = u[2] / u[0];
        dmatrix![
            0.0, 1.0, 0.0;
            0.5 * (g - 3.0) * vel * vel, (3.0 - g) * vel, g - 1.0;
            -g * e * vel + (g - 1.0) * vel.powi(3), g * e - 1.5 * (g - 1.0) * vel * vel, g * vel
        ]
    }

    fn source(&self, u: &StateVector, x: f64) -> StateVector {
        dvector![0.0, self.scaled_pressure(u) * self.area_slope(x) / self.area(x), 0.0]
    }

    fn eigen(&self, u: &StateVector) -> Result<Eigen> {
        let p = self.scaled_pressure(u);
        if !(u[0] > 0.0 && p > 0.0) {
            return Err(Error::Hyperbolicity(format!(
                "density {} / pressure {p} not positive",
                u[0]
            )));
        }
        let g = self.gamma;
        let vel = u[1] / u[0];
        let c = (g * p / u[0]).sqrt();
        let h = (u[2] + p) / u[0];
        let right = dmatrix![
            1.0, 1.0, 1.0;
            vel - c, vel, vel + c;
            h - vel * c, 0.5 * vel * vel, h + vel * c
        ];
        let b1 = (g - 1.0) / (c * c);
        let b2 = 0.5 * b1 * vel * vel;
        let left = dmatrix![
            0.5 * (b2 + vel / c), -0.5 * (b1 * vel + 1.0 / c), 0.5 * b1;
            1.0 - b2, b1 * vel, -b1;
            0.5 * (b2 - vel / c), -0.5 * (b1 * vel - 1.0 / c), 0.5 * b1
        ];
        Ok(Eigen {
            values: dvector![vel - c, vel, vel + c],
            right,
            left,
        })
    }

    fn boundary(&self) -> &BoundarySpec {
        &self.boundary
    }

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("gamma".to_string(), self.gamma),
            ("gas_constant".to_string(), self.gas_constant),
            ("throat".to_string(), self.throat),
            ("throat_coef".to_string(), self.throat_coef),
            ("length".to_string(), self.length),
            ("p_left".to_string(), self.p_left),
            ("t_left".to_string(), self.t_left),
            ("p_right".to_string(), self.p_right),
            ("velocity_seed".to_string(), self.velocity_seed),
        ])
    }

    fn admissible(&self, u: &StateVector) -> bool {
        u.iter().all(|v| v.is_finite()) && u[0] > 0.0 && self.scaled_pressure(u) > 0.0
    }

    fn source_switch_points(&self) -> Vec<f64> {
        vec![self.throat]
    }

    fn component_scales(&self) -> Vec<f64> {
        let u = &self.boundary.left_reference;
        let c = self.sound_speed(u);
        vec![u[0].abs(), (u[0] * c).abs(), u[2].abs()]
    }
}

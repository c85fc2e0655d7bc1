use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{dmatrix, dvector};

use super::{BoundarySpec, Eigen, LeftBoundary, Matrix, Model1D, RightCondition, StateVector};
use crate::error::{Error, Result};

/// Duct cross-section `A(x) = mean - amplitude * cos(frequency * pi * x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuctArea {
    pub mean: f64,
    pub amplitude: f64,
    pub frequency: f64,
}

impl DuctArea {
    pub fn area(&self, x: f64) -> f64 {
        self.mean - self.amplitude * (self.frequency * PI * x).cos()
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.amplitude * self.frequency * PI * (self.frequency * PI * x).sin()
    }

    /// Zeros of `A'` in `[a, b]`, endpoints included when they are zeros.
    pub fn slope_zeros(&self, a: f64, b: f64) -> Vec<f64> {
        if self.amplitude == 0.0 || self.frequency == 0.0 {
            return Vec::new();
        }
        let step = 1.0 / self.frequency;
        let first = (a / step).ceil() as i64;
        let last = (b / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

/// Isentropic flow through a duct of varying area, state `(rho, m)`:
/// flux `(m, m^2/rho + kappa rho^gamma)`, source `-(A'/A)(m, m^2/rho)`.
#[derive(Debug, Clone)]
pub struct IsentropicDuct {
    id: String,
    pub gamma: f64,
    pub kappa: f64,
    pub area: DuctArea,
    pub rho_left: f64,
    pub m_left: f64,
    pub rho_right: f64,
    boundary: BoundarySpec,
}

impl IsentropicDuct {
    pub fn new(
        id: impl Into<String>,
        gamma: f64,
        kappa: f64,
        area: DuctArea,
        rho_left: f64,
        m_left: f64,
        rho_right: f64,
    ) -> Self {
        let left = dvector![rho_left, m_left];
        let m_right_guess = m_left * area.area(0.0) / area.area(1.0);
        let boundary = BoundarySpec {
            left: LeftBoundary::Full(left.clone()),
            right: vec![RightCondition {
                name: "rho(1) - rho_R".into(),
                eval: Arc::new(move |u: &StateVector| u[0] - rho_right),
                scale: rho_right.abs(),
            }],
            left_ghost: {
                let left = left.clone();
                Arc::new(move |_| left.clone())
            },
            right_ghost: Arc::new(move |interior: &StateVector| dvector![rho_right, interior[1]]),
            left_reference: left,
            right_reference: dvector![rho_right, m_right_guess],
        };
        IsentropicDuct {
            id: id.into(),
            gamma,
            kappa,
            area,
            rho_left,
            m_left,
            rho_right,
            boundary,
        }
    }

    /// Single-well duct `A(x) = 6/5 - (2/5) cos(pi x)` with `m(0) = 2`,
    /// `rho(0) = 1`, `rho(1) = 2`.
    pub fn single() -> Self {
        Self::new(
            "isentropic_duct",
            1.4,
            1.0,
            DuctArea {
                mean: 1.2,
                amplitude: 0.4,
                frequency: 1.0,
            },
            1.0,
            2.0,
            2.0,
        )
    }

    /// Oscillating duct `A(x) = 1.2 - 0.2 cos(4 pi x)`, same boundary data.
    pub fn multi() -> Self {
        Self::new(
            "isentropic_duct_multi",
            1.4,
            1.0,
            DuctArea {
                mean: 1.2,
                amplitude: 0.2,
                frequency: 4.0,
            },
            1.0,
            2.0,
            2.0,
        )
    }

    pub fn sound_speed(&self, rho: f64) -> f64 {
        (self.kappa * self.gamma * rho.powf(self.gamma - 1.0)).sqrt()
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.kappa * rho.powf(self.gamma)
    }
}

impl Model1D for IsentropicDuct {
    fn id(&self) -> &str {
        &self.id
    }

    fn size(&self) -> usize {
        2
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn flux(&self, u: &StateVector) -> StateVector {
        let (rho, m) = (u[0], u[1]);
        dvector![m, m * m / rho + self.pressure(rho)]
    }

    fn jacobian(&self, u: &StateVector) -> Matrix {
        let (rho, m) = (u[0], u[1]);
        let vel = m / rho;
        let c2 = self.kappa * self.gamma * rho.powf(self.gamma - 1.0);
        dmatrix![0.0, 1.0; c2 - vel * vel, 2.0 * vel]
    }

    fn source(&self, u: &StateVector, x: f64) -> StateVector {
        let (rho, m) = (u[0], u[1]);
        let ratio = self.area.slope(x) / self.area.area(x);
        dvector![-ratio * m, -ratio * m * m / rho]
    }

    fn eigen(&self, u: &StateVector) -> Result<Eigen> {
        let (rho, m) = (u[0], u[1]);
        if !(rho > 0.0) {
            return Err(Error::Hyperbolicity(format!("density {rho} <= 0")));
        }
        let vel = m / rho;
        let c = self.sound_speed(rho);
        let (l1, l2) = (vel - c, vel + c);
        let right = dmatrix![1.0, 1.0; l1, l2];
        let inv = 1.0 / (l2 - l1);
        let left = dmatrix![l2 * inv, -inv; -l1 * inv, inv];
        Ok(Eigen {
            values: dvector![l1, l2],
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
            ("kappa".to_string(), self.kappa),
            ("area_mean".to_string(), self.area.mean),
            ("area_amplitude".to_string(), self.area.amplitude),
            ("area_frequency".to_string(), self.area.frequency),
            ("rho_left".to_string(), self.rho_left),
            ("m_left".to_string(), self.m_left),
            ("rho_right".to_string(), self.rho_right),
        ])
    }

    fn admissible(&self, u: &StateVector) -> bool {
        u[0] > 0.0 && u[1].is_finite() && u[0].is_finite()
    }

    fn source_switch_points(&self) -> Vec<f64> {
        self.area.slope_zeros(0.0, 1.0)
    }

    fn component_scales(&self) -> Vec<f64> {
        vec![self.rho_left.abs().max(self.rho_right.abs()), self.m_left.abs().max(1e-12)]
    }
}

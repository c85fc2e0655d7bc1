use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{dmatrix, dvector};
use serde::{Deserialize, Serialize};

use super::{Conservation2D, Eigen, Matrix, Rect, Side, SideCondition, StateVector, System2D};
use crate::error::{Error, Result};

/// Primitive variables `(rho, u, v, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitive2D {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

impl Primitive2D {
    pub fn to_conserved(self, gamma: f64) -> StateVector {
        let e = self.p / (gamma - 1.0) + 0.5 * self.rho * (self.u * self.u + self.v * self.v);
        dvector![self.rho, self.rho * self.u, self.rho * self.v, e]
    }

    pub fn from_conserved(w: &StateVector, gamma: f64) -> Self {
        let rho = w[0];
        let u = w[1] / rho;
        let v = w[2] / rho;
        let p = (gamma - 1.0) * (w[3] - 0.5 * rho * (u * u + v * v));
        Primitive2D { rho, u, v, p }
    }

    pub fn sound_speed(&self, gamma: f64) -> f64 {
        (gamma * self.p / self.rho).sqrt()
    }
}

/// 2D compressible Euler equations, state `(rho, rho u, rho v, E)`.
#[derive(Clone)]
pub struct Euler2D {
    id: String,
    pub gamma: f64,
    domain: Rect,
    /// Indexed left, right, bottom, top.
    sides: [SideCondition; 4],
    inflow: Primitive2D,
    top: Primitive2D,
}

impl std::fmt::Debug for Euler2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Euler2D")
            .field("id", &self.id)
            .field("gamma", &self.gamma)
            .field("domain", &self.domain)
            .field("sides", &self.sides)
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

impl Euler2D {
    /// Oblique shock reflecting off a slip wall: supersonic inflow on the
    /// left, post-shock state on the top, wall at the bottom, free outflow
    /// on the right.
    pub fn reflection(gamma: f64, length: f64, inflow: Primitive2D, top: Primitive2D) -> Self {
        let w_in = inflow.to_conserved(gamma);
        let w_top = top.to_conserved(gamma);
        Euler2D {
            id: "euler2d_reflection".into(),
            gamma,
            domain: Rect {
                x0: 0.0,
                x1: length,
                y0: 0.0,
                y1: 1.0,
            },
            sides: [
                SideCondition::State(Arc::new(move |_, _| w_in.clone())),
                SideCondition::Free,
                SideCondition::Reflect,
                SideCondition::State(Arc::new(move |_, _| w_top.clone())),
            ],
            inflow,
            top,
        }
    }

    pub fn standard() -> Self {
        let gamma = 1.4;
        Self::reflection(
            gamma,
            4.0,
            Primitive2D {
                rho: 1.0,
                u: 2.9,
                v: 0.0,
                p: 1.0 / gamma,
            },
            Primitive2D {
                rho: 1.69997,
                u: 2.61934,
                v: -0.50632,
                p: 1.528191,
            },
        )
    }

    pub fn inflow(&self) -> Primitive2D {
        self.inflow
    }

    pub fn top_state(&self) -> Primitive2D {
        self.top
    }

    pub fn primitive(&self, w: &StateVector) -> Primitive2D {
        Primitive2D::from_conserved(w, self.gamma)
    }

    pub fn pressure(&self, w: &StateVector) -> f64 {
        (self.gamma - 1.0) * (w[3] - 0.5 * (w[1] * w[1] + w[2] * w[2]) / w[0])
    }

    pub fn sound_speed(&self, w: &StateVector) -> f64 {
        (self.gamma * self.pressure(w) / w[0]).sqrt()
    }

    /// Total enthalpy `(E + p) / rho`, constant along streamlines.
    pub fn enthalpy(&self, w: &StateVector) -> f64 {
        (w[3] + self.pressure(w)) / w[0]
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("gamma".to_string(), self.gamma),
            ("length".to_string(), self.domain.x1 - self.domain.x0),
            ("rho_in".to_string(), self.inflow.rho),
            ("u_in".to_string(), self.inflow.u),
            ("v_in".to_string(), self.inflow.v),
            ("p_in".to_string(), self.inflow.p),
            ("rho_top".to_string(), self.top.rho),
            ("u_top".to_string(), self.top.u),
            ("v_top".to_string(), self.top.v),
            ("p_top".to_string(), self.top.p),
        ])
    }

    fn check(&self, w: &StateVector) -> Result<(f64, f64, f64, f64, f64)> {
        let p = self.pressure(w);
        if !(w[0] > 0.0 && p > 0.0) {
            return Err(Error::Hyperbolicity(format!("density {} / pressure {p} not positive", w[0])));
        }
        let u = w[1] / w[0];
        let v = w[2] / w[0];
        let c = (self.gamma * p / w[0]).sqrt();
        let h = (w[3] + p) / w[0];
        Ok((u, v, c, h, p))
    }
}

/// Eigenvalues of `grad g (grad f)^-1` with normal speed `a` (marching
/// direction) and tangential speed `b`: `b/a` and
/// `(a b +- c sqrt(a^2 + b^2 - c^2)) / (a^2 - c^2)`.
fn paraxial_speeds(a: f64, b: f64, c: f64) -> Result<[f64; 3]> {
    let d = a * a - c * c;
    if d <= 0.0 {
        return Err(Error::Hyperbolicity(format!("marching speed {a} not supersonic (c = {c})")));
    }
    let root = c * (a * a + b * b - c * c).sqrt();
    Ok([b / a, (a * b - root) / d, (a * b + root) / d])
}

impl Conservation2D for Euler2D {
    fn id(&self) -> &str {
        &self.id
    }

    fn size(&self) -> usize {
        4
    }

    fn domain(&self) -> Rect {
        self.domain
    }

    fn flux_f(&self, w: &StateVector) -> StateVector {
        let u = w[1] / w[0];
        let p = self.pressure(w);
        dvector![w[1], w[1] * u + p, w[2] * u, u * (w[3] + p)]
    }

    fn flux_g(&self, w: &StateVector) -> StateVector {
        let v = w[2] / w[0];
        let p = self.pressure(w);
        dvector![w[2], w[1] * v, w[2] * v + p, v * (w[3] + p)]
    }

    fn source(&self, _w: &StateVector, _x: f64, _y: f64) -> StateVector {
        StateVector::zeros(4)
    }

    fn max_speeds(&self, w: &StateVector) -> (f64, f64) {
        let c = self.sound_speed(w);
        ((w[1] / w[0]).abs() + c, (w[2] / w[0]).abs() + c)
    }

    fn ghost(&self, side: Side, interior: &StateVector, x: f64, y: f64) -> StateVector {
        match &self.sides[side_index(side)] {
            SideCondition::State(data) => data(x, y),
            SideCondition::Reflect => self.reflect(interior, side),
            SideCondition::Free => interior.clone(),
        }
    }

    fn admissible(&self, w: &StateVector) -> bool {
        w.iter().all(|v| v.is_finite()) && w[0] > 0.0 && self.pressure(w) > 0.0
    }

    fn initial_state(&self, _x: f64, _y: f64) -> StateVector {
        self.inflow.to_conserved(self.gamma)
    }

    fn component_scales(&self) -> Vec<f64> {
        let w = self.inflow.to_conserved(self.gamma);
        let q = w[1].hypot(w[2]);
        vec![w[0], q, q, w[3]]
    }
}

impl System2D for Euler2D {
    fn jacobian_f(&self, w: &StateVector) -> Matrix {
        let g1 = self.gamma - 1.0;
        let u = w[1] / w[0];
        let v = w[2] / w[0];
        let q2 = u * u + v * v;
        let h = self.enthalpy(w);
        dmatrix![
            0.0, 1.0, 0.0, 0.0;
            0.5 * g1 * q2 - u * u, (3.0 - self.gamma) * u, -g1 * v, g1;
            -u * v, v, u, 0.0;
            u * (0.5 * g1 * q2 - h), h - g1 * u * u, -g1 * u * v, self.gamma * u
        ]
    }

    fn jacobian_g(&self, w: &StateVector) -> Matrix {
        let g1 = self.gamma - 1.0;
        let u = w[1] / w[0];
        let v = w[2] / w[0];
        let q2 = u * u + v * v;
        let h = self.enthalpy(w);
        dmatrix![
            0.0, 0.0, 1.0, 0.0;
            -u * v, v, u, 0.0;
            0.5 * g1 * q2 - v * v, -g1 * u, (3.0 - self.gamma) * v, g1;
            v * (0.5 * g1 * q2 - h), -g1 * u * v, h - g1 * v * v, self.gamma * v
        ]
    }

    fn eigen_f(&self, w: &StateVector) -> Result<Eigen> {
        let (u, v, c, h, _) = self.check(w)?;
        let q2 = u * u + v * v;
        let right = dmatrix![
            1.0, 1.0, 0.0, 1.0;
            u - c, u, 0.0, u + c;
            v, v, 1.0, v;
            h - u * c, 0.5 * q2, v, h + u * c
        ];
        let left = right
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Hyperbolicity("singular eigenvector matrix".into()))?;
        Ok(Eigen {
            values: dvector![u - c, u, u, u + c],
            right,
            left,
        })
    }

    fn eigen_g(&self, w: &StateVector) -> Result<Eigen> {
        let (u, v, c, h, _) = self.check(w)?;
        let q2 = u * u + v * v;
        let right = dmatrix![
            1.0, 1.0, 0.0, 1.0;
            u, u, 1.0, u;
            v - c, v, 0.0, v + c;
            h - v * c, 0.5 * q2, u, h + v * c
        ];
        let left = right
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Hyperbolicity("singular eigenvector matrix".into()))?;
        Ok(Eigen {
            values: dvector![v - c, v, v, v + c],
            right,
            left,
        })
    }

    fn paraxial_radius(&self, w: &StateVector, marches_in_x: bool) -> Result<f64> {
        let (u, v, c, _, _) = self.check(w)?;
        let (a, b) = if marches_in_x { (u, v) } else { (v, u) };
        let s = paraxial_speeds(a.abs(), b, c)?;
        Ok(s.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
    }

    fn side_condition(&self, side: Side) -> &SideCondition {
        &self.sides[side_index(side)]
    }

    fn reflect(&self, w: &StateVector, side: Side) -> StateVector {
        let mut r = w.clone();
        if side.marches_in_x() {
            r[1] = -r[1];
        } else {
            r[2] = -r[2];
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fd_jacobian;

    #[test]
    fn inflow_is_supersonic_in_x() {
        let m = Euler2D::standard();
        let w = m.inflow().to_conserved(m.gamma);
        let e = m.eigen_f(&w).unwrap();
        assert!((m.sound_speed(&w) - 1.0).abs() < 1e-12);
        assert!((e.values[0] - 1.9).abs() < 1e-12);
    }

    #[test]
    fn jacobians_match_differences() {
        let m = Euler2D::standard();
        let w = m.top_state().to_conserved(m.gamma);
        let jf = fd_jacobian(|s| m.flux_f(s), &w, 1e-6);
        let jg = fd_jacobian(|s| m.flux_g(s), &w, 1e-6);
        assert!((jf - m.jacobian_f(&w)).amax() < 1e-6);
        assert!((jg - m.jacobian_g(&w)).amax() < 1e-6);
    }

    #[test]
    fn eigen_diagonalizes() {
        let m = Euler2D::standard();
        let w = m.top_state().to_conserved(m.gamma);
        for (e, j) in [(m.eigen_f(&w).unwrap(), m.jacobian_f(&w)), (m.eigen_g(&w).unwrap(), m.jacobian_g(&w))] {
            let d = &e.left * j * &e.right - Matrix::from_diagonal(&e.values);
            assert!(d.amax() < 1e-9);
        }
    }

    #[test]
    fn paraxial_radius_matches_matrix() {
        let m = Euler2D::standard();
        let w = m.top_state().to_conserved(m.gamma);
        let a = m.jacobian_g(&w) * m.jacobian_f(&w).try_inverse().unwrap();
        let ev = a.complex_eigenvalues();
        let rho = ev.iter().fold(0.0_f64, |r, z| r.max(z.norm()));
        assert!((rho - m.paraxial_radius(&w, true).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn reflection_flips_normal_momentum() {
        let m = Euler2D::standard();
        let w = m.top_state().to_conserved(m.gamma);
        let r = m.ghost(Side::Bottom, &w, 1.0, 0.0);
        assert_eq!(r[2], -w[2]);
        assert_eq!(r[1], w[1]);
    }
}

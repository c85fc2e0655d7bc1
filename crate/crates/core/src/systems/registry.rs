//! Catalogue of the built-in benchmark problems.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    Conservation2D, DuctArea, Euler2D, IsentropicDuct, Model1D, Nozzle, Primitive2D, Scalar1D, Scalar2D,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub id: &'static str,
    pub dimension: usize,
    pub size: usize,
    pub description: &'static str,
    pub params: BTreeMap<String, f64>,
}

/// A constructed model, tagged by kind.
#[derive(Debug, Clone)]
pub enum Problem {
    Scalar1D(Scalar1D),
    Isentropic(IsentropicDuct),
    Nozzle(Nozzle),
    Scalar2D(Scalar2D),
    Euler2D(Euler2D),
}

impl Problem {
    pub fn id(&self) -> &str {
        match self {
            Problem::Scalar1D(m) => Model1D::id(m),
            Problem::Isentropic(m) => Model1D::id(m),
            Problem::Nozzle(m) => Model1D::id(m),
            Problem::Scalar2D(m) => Conservation2D::id(m),
            Problem::Euler2D(m) => Conservation2D::id(m),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Problem::Scalar1D(_) | Problem::Isentropic(_) | Problem::Nozzle(_) => 1,
            _ => 2,
        }
    }

    pub fn as_1d(&self) -> Option<&dyn Model1D> {
        match self {
            Problem::Scalar1D(m) => Some(m),
            Problem::Isentropic(m) => Some(m),
            Problem::Nozzle(m) => Some(m),
            _ => None,
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        match self {
            Problem::Scalar1D(m) => Model1D::params(m),
            Problem::Isentropic(m) => Model1D::params(m),
            Problem::Nozzle(m) => Model1D::params(m),
            Problem::Scalar2D(m) => m.params(),
            Problem::Euler2D(m) => m.params(),
        }
    }
}

const CATALOGUE: [(&str, &str); 9] = [
    ("burgers1d_hj", "(v^2)_x = v on [0,1], v(0)=1, v(1)=-1; shock at x=1/2"),
    ("isentropic_duct", "isentropic duct flow, A(x) = 6/5 - (2/5)cos(pi x), single 1-shock"),
    ("isentropic_duct_multi", "isentropic duct flow, A(x) = 1.2 - 0.2cos(4 pi x), four steady states"),
    ("nozzle", "quasi-1D Euler nozzle, transonic with a shock in the diverging part"),
    ("three_states", "(k u^2)_x + (u - u^3)_y = 0 with three constant boundary states"),
    ("three_states_perturbed", "three_states with left data 0.75 + 0.2 sin(pi y)"),
    ("burgers2d", "2D Burgers with source, curved shock y = 0.5 + 0.5cos(pi x)"),
    ("scalar2d", "(u^2/2)_x + u_y = 0, compression wave focusing into a shock"),
    ("euler2d_reflection", "2D Euler oblique shock reflecting off a wall"),
];

pub fn list_models() -> Vec<ModelInfo> {
    CATALOGUE
        .iter()
        .map(|(id, description)| {
            let p = build_model(id, &BTreeMap::new()).expect("built-in model");
            let size = match &p {
                Problem::Scalar2D(_) => 1,
                Problem::Euler2D(_) => 4,
                other => other.as_1d().map_or(0, |m| m.size()),
            };
            ModelInfo {
                id,
                dimension: p.dimension(),
                size,
                description,
                params: p.params(),
            }
        })
        .collect()
}

struct Overrides<'a> {
    map: &'a BTreeMap<String, f64>,
    used: Vec<&'a str>,
}

impl<'a> Overrides<'a> {
    fn get(&mut self, key: &str, default: f64) -> f64 {
        match self.map.get_key_value(key) {
            Some((k, v)) => {
                self.used.push(k.as_str());
                *v
            }
            None => default,
        }
    }

    fn finish(self, id: &str) -> Result<()> {
        let unknown: Vec<_> = self
            .map
            .keys()
            .filter(|k| !self.used.contains(&k.as_str()))
            .cloned()
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown parameters for {id}: {}", unknown.join(", "))))
        }
    }
}

/// Build a catalogue model, applying named parameter overrides.
pub fn build_model(id: &str, overrides: &BTreeMap<String, f64>) -> Result<Problem> {
    let mut o = Overrides {
        map: overrides,
        used: Vec::new(),
    };
    let problem = match id {
        "burgers1d_hj" => {
            let vl = o.get("v_left", 1.0);
            let vr = o.get("v_right", -1.0);
            Problem::Scalar1D(Scalar1D::new(id, |v| v * v, |v| 2.0 * v, |v, _| v, (0.0, 1.0), vl, vr))
        }
        "isentropic_duct" | "isentropic_duct_multi" => {
            let base = if id == "isentropic_duct" {
                IsentropicDuct::single()
            } else {
                IsentropicDuct::multi()
            };
            Problem::Isentropic(IsentropicDuct::new(
                id,
                o.get("gamma", base.gamma),
                o.get("kappa", base.kappa),
                DuctArea {
                    mean: o.get("area_mean", base.area.mean),
                    amplitude: o.get("area_amplitude", base.area.amplitude),
                    frequency: o.get("area_frequency", base.area.frequency),
                },
                o.get("rho_left", base.rho_left),
                o.get("m_left", base.m_left),
                o.get("rho_right", base.rho_right),
            ))
        }
        "nozzle" => {
            let b = Nozzle::standard();
            Problem::Nozzle(Nozzle::new(
                o.get("gamma", b.gamma),
                o.get("gas_constant", b.gas_constant),
                o.get("throat", b.throat),
                o.get("throat_coef", b.throat_coef),
                o.get("length", b.length),
                o.get("p_left", b.p_left),
                o.get("t_left", b.t_left),
                o.get("p_right", b.p_right),
                o.get("velocity_seed", b.velocity_seed),
            ))
        }
        "three_states" | "three_states_perturbed" => Problem::Scalar2D(Scalar2D::three_states(
            o.get("alpha", 1.2),
            o.get("u_left", 0.75),
            o.get("split", 0.5),
            id == "three_states_perturbed",
        )),
        "burgers2d" => Problem::Scalar2D(Scalar2D::burgers()),
        "scalar2d" => Problem::Scalar2D(Scalar2D::scalar_shock()),
        "euler2d_reflection" => {
            let b = Euler2D::standard();
            let gamma = o.get("gamma", b.gamma);
            let i = b.inflow();
            let t = b.top_state();
            Problem::Euler2D(Euler2D::reflection(
                gamma,
                o.get("length", 4.0),
                Primitive2D {
                    rho: o.get("rho_in", i.rho),
                    u: o.get("u_in", i.u),
                    v: o.get("v_in", i.v),
                    p: o.get("p_in", 1.0 / gamma),
                },
                Primitive2D {
                    rho: o.get("rho_top", t.rho),
                    u: o.get("u_top", t.u),
                    v: o.get("v_top", t.v),
                    p: o.get("p_top", t.p),
                },
            ))
        }
        _ => return Err(Error::Config(format!("unknown problem '{id}'"))),
    };
    o.finish(id)?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_builds() {
        let all = list_models();
        assert_eq!(all.len(), 9);
        assert!(all.iter().any(|m| m.id == "euler2d_reflection" && m.size == 4));
    }

    #[test]
    fn unknown_problem_is_config_error() {
        let e = build_model("nope", &BTreeMap::new()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_override_rejected() {
        let o = BTreeMap::from([("bogus".to_string(), 1.0)]);
        assert!(build_model("nozzle", &o).is_err());
    }

    #[test]
    fn three_states_slope_relation() {
        let Problem::Scalar2D(m) = build_model("three_states", &BTreeMap::new()).unwrap() else {
            panic!()
        };
        let p = m.params();
        let (k, ul) = (p["k"], p["u_left"]);
        assert!(((1.0 - ul * ul) / (k * ul) - p["alpha"]).abs() < 1e-12);
        assert!((k - 0.486111).abs() < 1e-6);
    }
}

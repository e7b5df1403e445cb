//! Conductor placement, distance matrices and per-family geometric
//! constraints.
//!
//! Coordinates are in mm with conductors ordered (a, b, c, n). Overhead
//! heights are positive; buried cables sit at negative `v_ref`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::catalog::{BoundSet, ConfigSpec, Family, StandardGeometry};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeometryVar {
    U1,
    U2,
    V1,
    VRef,
}

impl GeometryVar {
    pub fn name(self) -> &'static str {
        match self {
            GeometryVar::U1 => "u1",
            GeometryVar::U2 => "u2",
            GeometryVar::V1 => "v1",
            GeometryVar::VRef => "v_ref",
        }
    }
}

/// Free geometry variables of one line [mm].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeometryVars {
    pub u1: Option<f64>,
    pub u2: Option<f64>,
    pub v1: Option<f64>,
    pub v_ref: f64,
}

impl GeometryVars {
    pub fn get(&self, v: GeometryVar) -> Option<f64> {
        match v {
            GeometryVar::U1 => self.u1,
            GeometryVar::U2 => self.u2,
            GeometryVar::V1 => self.v1,
            GeometryVar::VRef => Some(self.v_ref),
        }
    }

    /// Variables of a standard geometry; `None` when the family needs a
    /// value the standard does not fix (cable core spacing).
    pub fn from_standard(config: &ConfigSpec, sg: &StandardGeometry) -> Option<GeometryVars> {
        let vars = GeometryVars {
            u1: sg.u1,
            u2: sg.u2,
            v1: sg.v1,
            v_ref: sg.v_ref,
        };
        free_variables(config.family)
            .iter()
            .all(|v| vars.get(*v).is_some())
            .then_some(vars)
    }
}

/// The free geometry variables of a family.
pub fn free_variables(family: Family) -> &'static [GeometryVar] {
    use GeometryVar::*;
    match family {
        Family::Horizontal4w => &[U1, U2, VRef],
        Family::NeutralUnder => &[U1, V1, VRef],
        _ => &[U1, VRef],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSet {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceSet {
    /// Conductor-to-conductor distances; zero diagonal.
    pub d: DMatrix<f64>,
    /// Conductor-to-image distances.
    pub s: DMatrix<f64>,
}

fn check_vars(config: &ConfigSpec, vars: &GeometryVars) -> Result<()> {
    let need = free_variables(config.family);
    for (v, val) in [
        (GeometryVar::U1, vars.u1),
        (GeometryVar::U2, vars.u2),
        (GeometryVar::V1, vars.v1),
    ] {
        match (need.contains(&v), val) {
            (true, None) => {
                return Err(Error::Contract(format!("{} requires {}", config.name, v.name())))
            }
            (false, Some(_)) => {
                return Err(Error::Contract(format!("{} does not take {}", config.name, v.name())))
            }
            (_, Some(x)) if !(x >= 0.0) => {
                return Err(Error::Domain(format!("{} must be nonnegative, got {x}", v.name())))
            }
            _ => {}
        }
    }
    if !vars.v_ref.is_finite() {
        return Err(Error::Domain("v_ref must be finite".into()));
    }
    Ok(())
}

/// Conductor coordinates for a family and its free variables.
pub fn place_conductors(config: &ConfigSpec, vars: &GeometryVars) -> Result<CoordinateSet> {
    check_vars(config, vars)?;
    let u1 = vars.u1.unwrap_or(0.0);
    let h = vars.v_ref;
    let (x, y) = match config.family {
        Family::Horizontal4w => {
            let u2 = vars.u2.unwrap_or(0.0);
            if u1 > u2 {
                return Err(Error::Domain(format!("u1 ({u1}) exceeds u2 ({u2})")));
            }
            (vec![-u2, -u1, u1, u2], vec![h; 4])
        }
        Family::NeutralUnder => {
            let v1 = vars.v1.unwrap_or(0.0);
            (vec![-u1, 0.0, u1, 0.0], vec![h, h, h, h - v1])
        }
        Family::Horizontal3w => (vec![-u1, 0.0, u1], vec![h; 3]),
        Family::Triangular => {
            let theta = config
                .theta
                .ok_or_else(|| Error::Contract(format!("{} has no apex angle", config.name)))?;
            let v1 = u1 * theta.to_radians().tan();
            (vec![-u1, 0.0, u1], vec![h, h + v1, h])
        }
        Family::Horizontal2w | Family::Cable2 => (vec![-u1, u1], vec![h; 2]),
        Family::Cable4 => (
            vec![u1, -u1, -u1, u1],
            vec![h + u1, h + u1, h - u1, h - u1],
        ),
        Family::Cable3 => {
            let k = u1 / 3f64.sqrt();
            (vec![-u1, 0.0, u1], vec![h - k, h + 2.0 * k, h - k])
        }
    };
    Ok(CoordinateSet { x, y })
}

/// Euclidean and mirror-image distance matrices.
pub fn distance_matrices(coords: &CoordinateSet) -> Result<DistanceSet> {
    let n = coords.x.len();
    if coords.y.len() != n {
        return Err(Error::Contract("x and y coordinate lengths differ".into()));
    }
    if coords.x.iter().chain(&coords.y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite coordinate".into()));
    }
    let mut d = DMatrix::zeros(n, n);
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        let (xi, yi) = (coords.x[i], coords.y[i]);
        s[(i, i)] = (2.0 * yi).abs();
        if s[(i, i)] == 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "conductor {i} lies on the ground plane"
            )));
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            let (xj, yj) = (coords.x[j], coords.y[j]);
            d[(i, j)] = ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt();
            s[(i, j)] = ((xi - xj).powi(2) + (yi + yj).powi(2)).sqrt();
            if d[(i, j)] == 0.0 {
                return Err(Error::DegenerateGeometry(format!(
                    "conductors {i} and {j} coincide"
                )));
            }
        }
    }
    Ok(DistanceSet { d, s })
}

/// `sum(coeff * var) + constant >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub rule: String,
    pub terms: Vec<(GeometryVar, f64)>,
    pub constant: f64,
}

impl LinearConstraint {
    fn new(rule: &str, terms: &[(GeometryVar, f64)], constant: f64) -> Self {
        Self {
            rule: rule.to_string(),
            terms: terms.to_vec(),
            constant,
        }
    }

    /// Constraint value, or `None` if a referenced variable is missing.
    pub fn value(&self, vars: &GeometryVars) -> Option<f64> {
        let mut acc = self.constant;
        for (v, c) in &self.terms {
            acc += c * vars.get(*v)?;
        }
        Some(acc)
    }

    /// The bound `(var, lower, upper)` when the constraint involves a single
    /// variable.
    pub fn as_bound(&self) -> Option<(GeometryVar, f64, f64)> {
        match self.terms.as_slice() {
            [(v, c)] if *c > 0.0 => Some((*v, -self.constant / c, f64::INFINITY)),
            [(v, c)] if *c < 0.0 => Some((*v, f64::NEG_INFINITY, -self.constant / c)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstraintSet {
    pub constraints: Vec<LinearConstraint>,
}

impl GeometryConstraintSet {
    /// Constraints violated by more than a relative 1e-9.
    pub fn violations(&self, vars: &GeometryVars) -> Vec<&LinearConstraint> {
        self.constraints
            .iter()
            .filter(|c| match c.value(vars) {
                Some(v) => v < -1e-9 * (1.0 + c.constant.abs()),
                None => true,
            })
            .collect()
    }
}

/// The full constraint list of a family under the given bounds.
pub fn geometry_constraints(config: &ConfigSpec, bounds: &BoundSet) -> GeometryConstraintSet {
    use GeometryVar::*;
    let d = bounds.d_min_oh;
    let umax = bounds.u_max_oh;
    let mut c = Vec::new();
    match config.family {
        Family::Horizontal4w => {
            c.push(LinearConstraint::new("u2 <= u_max_oh", &[(U2, -1.0)], umax));
            c.push(LinearConstraint::new("u2 >= u1 + d_min", &[(U2, 1.0), (U1, -1.0)], -d));
            c.push(LinearConstraint::new("u1 >= d_min/2", &[(U1, 1.0)], -d / 2.0));
        }
        Family::NeutralUnder => {
            c.push(LinearConstraint::new("u1 <= u_max_oh", &[(U1, -1.0)], umax));
            c.push(LinearConstraint::new("u1 >= d_min", &[(U1, 1.0)], -d));
            c.push(LinearConstraint::new("v1 <= v_ref", &[(VRef, 1.0), (V1, -1.0)], 0.0));
            c.push(LinearConstraint::new("v1 >= d_min", &[(V1, 1.0)], -d));
        }
        Family::Horizontal3w => {
            c.push(LinearConstraint::new("u1 <= u_max_oh", &[(U1, -1.0)], umax));
            c.push(LinearConstraint::new("u1 >= d_min", &[(U1, 1.0)], -d));
        }
        Family::Triangular => {
            let theta = config.theta.unwrap_or(0.0).to_radians();
            let lo = (d / 2.0).max(d * theta.cos());
            c.push(LinearConstraint::new("u1 <= u_max_oh", &[(U1, -1.0)], umax));
            c.push(LinearConstraint::new(
                "u1 >= max(d_min/2, d_min cos theta)",
                &[(U1, 1.0)],
                -lo,
            ));
        }
        Family::Horizontal2w => {
            c.push(LinearConstraint::new("u1 <= u_max_oh", &[(U1, -1.0)], umax));
            c.push(LinearConstraint::new("u1 >= d_min/2", &[(U1, 1.0)], -d / 2.0));
        }
        Family::Cable4 | Family::Cable3 | Family::Cable2 => {
            c.push(LinearConstraint::new("u1 >= u_min_cable", &[(U1, 1.0)], -bounds.u_min_cable));
            c.push(LinearConstraint::new("u1 <= u_max_cable", &[(U1, -1.0)], bounds.u_max_cable));
        }
    }
    let (vlo, vhi) = bounds.v_ref_range(config.kind);
    c.push(LinearConstraint::new("v_ref >= v_ref_min", &[(VRef, 1.0)], -vlo));
    c.push(LinearConstraint::new("v_ref <= v_ref_max", &[(VRef, -1.0)], vhi));
    GeometryConstraintSet { constraints: c }
}

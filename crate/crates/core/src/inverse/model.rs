//! Inverse model construction.
//!
//! A model carries two views of the same system. The full-space view lists
//! every intermediate quantity and its defining equality in real form; it is
//! used to check a recovered point against the closed-form forward path. The
//! reduced view eliminates those intermediates and leaves a small NLP over
//! the free decision variables plus epigraph/elastic auxiliaries, with exact
//! derivatives from dual numbers.

use std::collections::BTreeMap;

use carson_nlp::{ConstraintKind, Derivatives, Dual2, NlpProblem, Scalar};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::realform::{Decision, LineExpressions, LineModel};
use crate::catalog::{Catalog, CarsonConstants, Combination, LineKind};
use crate::conductor::AcCorrections;
use crate::error::{Error, Result};
use crate::forward::{LineSpec, SequenceComponents, TransformMatrix};
use crate::geometry::{geometry_constraints, place_conductors, GeometryVar, GeometryVars};

/// Decision variables of the inverse problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variable {
    #[serde(rename = "r")]
    Radius,
    #[serde(rename = "T")]
    Temperature,
    #[serde(rename = "u1")]
    U1,
    #[serde(rename = "u2")]
    U2,
    #[serde(rename = "v1")]
    V1,
    #[serde(rename = "v_ref")]
    VRef,
    #[serde(rename = "t_nom")]
    TNom,
}

impl Variable {
    pub const ALL: [Variable; 7] = [
        Variable::Radius,
        Variable::Temperature,
        Variable::U1,
        Variable::U2,
        Variable::V1,
        Variable::VRef,
        Variable::TNom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::Radius => "r",
            Variable::Temperature => "T",
            Variable::U1 => "u1",
            Variable::U2 => "u2",
            Variable::V1 => "v1",
            Variable::VRef => "v_ref",
            Variable::TNom => "t_nom",
        }
    }

    pub fn is_geometry(self) -> bool {
        matches!(self, Variable::U1 | Variable::U2 | Variable::V1 | Variable::VRef)
    }

    fn from_geometry(v: GeometryVar) -> Variable {
        match v {
            GeometryVar::U1 => Variable::U1,
            GeometryVar::U2 => Variable::U2,
            GeometryVar::V1 => Variable::V1,
            GeometryVar::VRef => Variable::VRef,
        }
    }
}

impl std::str::FromStr for Variable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variable::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Domain(format!("unknown variable `{s}`")))
    }
}

/// Values of the decision variables at one point.
pub type Point = BTreeMap<Variable, f64>;

/// Diagonal sequence components used as references or targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    R00,
    X00,
    R11,
    X11,
    B00,
    B11,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::R00,
        Component::X00,
        Component::R11,
        Component::X11,
        Component::B00,
        Component::B11,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::R00 => "R00",
            Component::X00 => "X00",
            Component::R11 => "R11",
            Component::X11 => "X11",
            Component::B00 => "B00",
            Component::B11 => "B11",
        }
    }

    pub fn of(self, s: &SequenceComponents) -> Option<f64> {
        match self {
            Component::R00 => Some(s.r00),
            Component::X00 => Some(s.x00),
            Component::R11 => Some(s.r11),
            Component::X11 => Some(s.x11),
            Component::B00 => s.b00,
            Component::B11 => s.b11,
        }
    }
}

/// Reference sequence components [ohm/km, uS/km].
///
/// Zero-sequence values may be absent when they were judged unreliable;
/// shunt values are either both present or both absent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceReference {
    pub kind: LineKind,
    pub r00: Option<f64>,
    pub x00: Option<f64>,
    pub r11: f64,
    pub x11: f64,
    pub b00: Option<f64>,
    pub b11: Option<f64>,
}

impl SequenceReference {
    pub fn series(kind: LineKind, r00: f64, x00: f64, r11: f64, x11: f64) -> Self {
        Self {
            kind,
            r00: Some(r00),
            x00: Some(x00),
            r11,
            x11,
            b00: None,
            b11: None,
        }
    }

    pub fn with_shunt(mut self, b00: f64, b11: f64) -> Self {
        self.b00 = Some(b00);
        self.b11 = Some(b11);
        self
    }

    /// References equal to forward results; shunt values are kept if present.
    pub fn from_components(kind: LineKind, s: &SequenceComponents) -> Self {
        Self {
            kind,
            r00: Some(s.r00),
            x00: Some(s.x00),
            r11: s.r11,
            x11: s.x11,
            b00: s.b00,
            b11: s.b11,
        }
    }

    pub fn series_only(mut self) -> Self {
        self.b00 = None;
        self.b11 = None;
        self
    }

    pub fn without_zero_sequence(mut self) -> Self {
        self.r00 = None;
        self.x00 = None;
        self.b00 = None;
        self
    }

    pub fn has_shunt(&self) -> bool {
        self.b11.is_some()
    }

    pub fn get(&self, c: Component) -> Option<f64> {
        match c {
            Component::R00 => self.r00,
            Component::X00 => self.x00,
            Component::R11 => Some(self.r11),
            Component::X11 => Some(self.x11),
            Component::B00 => self.b00,
            Component::B11 => self.b11,
        }
    }

    /// Present components in canonical order.
    pub fn components(&self) -> Vec<(Component, f64)> {
        Component::ALL
            .into_iter()
            .filter_map(|c| self.get(c).map(|v| (c, v)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (c, v) in self.components() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!(
                    "reference {} must be strictly positive, got {v}",
                    c.name()
                )));
            }
        }
        if self.b11.is_none() && self.b00.is_some() {
            return Err(Error::Contract("B00 given without B11".into()));
        }
        Ok(())
    }
}

/// How the sequence components enter the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    /// Match references as closely as possible.
    Feasibility,
    /// Diagonal entries fixed to the reference (starred) values.
    FixedSequence,
    /// Diagonal entries within a relative band `beta` around the reference.
    Slack(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    ZDiff,
    Minimize(Variable),
    Maximize(Variable),
    /// Total violation of the slack band; used to decide slack feasibility.
    BandExcess,
}

/// Knowledge and modelling choices that apply to every candidate.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ModelOptions {
    /// Known conductor temperature [degC]; fixes `T` when set.
    pub temperature: Option<f64>,
    /// Reference height when it is not a decision variable. Defaults to the
    /// configuration's standard geometry.
    pub v_ref: Option<f64>,
    pub corrections: AcCorrections,
    pub frequency: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeVariable {
    pub variable: Variable,
    pub lower: f64,
    pub upper: f64,
}

/// Role of a quantity in the full-space model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VariableRole {
    Decision,
    Fixed,
    Intermediate,
    Auxiliary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelVariable {
    pub name: String,
    pub role: VariableRole,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub name: String,
    /// Residual divided by one plus the magnitude of its largest term.
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Basis {
    Component(usize),
    Quantity(Variable),
    Aux(usize),
}

/// `sum(coef * basis) + constant`, either `= 0` or `>= 0`.
#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub name: String,
    terms: Vec<(Basis, f64)>,
    constant: f64,
    pub kind: ConstraintKind,
    pub geometry: bool,
}

/// A fully specified inverse problem for one combination.
#[derive(Clone, Debug)]
pub struct InverseModel {
    pub combination: Combination,
    pub constants: CarsonConstants,
    pub reference: SequenceReference,
    pub mode: Mode,
    pub objective: Objective,
    pub with_shunt: bool,
    pub corrections: AcCorrections,
    pub frequency: f64,
    /// Components entering the operational rows, with their reference values.
    pub included: Vec<(Component, f64)>,
    pub free: Vec<FreeVariable>,
    pub fixed: Vec<(Variable, f64)>,
    /// Set when the variable boxes or fixed values cannot be satisfied.
    pub infeasible_bounds: Option<String>,
    pub(crate) rows: Vec<Row>,
    objective_row: Row,
    pub(crate) aux_names: Vec<String>,
}

fn geometry_scale(kind: LineKind) -> f64 {
    match kind {
        LineKind::Overhead => 1000.0,
        LineKind::Cable => 10.0,
    }
}

/// Decision variables present for a combination, in canonical order.
fn decision_variables(combination: &Combination) -> Vec<Variable> {
    let cfg = &combination.config;
    let kr_cable = cfg.family.is_cable() && cfg.strand.k_r.is_some();
    let mut v = vec![Variable::Radius, Variable::Temperature];
    for g in crate::geometry::free_variables(cfg.family) {
        let var = Variable::from_geometry(*g);
        // the core spacing of stranded cables follows from r and t_nom
        if !(kr_cable && var == Variable::U1) && !v.contains(&var) {
            v.push(var);
        }
    }
    if kr_cable {
        v.push(Variable::TNom);
    }
    v
}

/// Builds the model of one combination.
pub fn build_model(
    catalog: &Catalog,
    combination: &Combination,
    reference: &SequenceReference,
    mode: Mode,
    objective: Objective,
    options: &ModelOptions,
) -> Result<InverseModel> {
    reference.validate()?;
    let cfg = &combination.config;
    if cfg.n_cond < 3 {
        return Err(Error::UnsupportedGeometry(format!(
            "{}: inverse estimation needs three or four conductors",
            cfg.name
        )));
    }
    if reference.kind != cfg.kind {
        return Err(Error::Contract(format!(
            "{} reference given for {} configuration {}",
            reference.kind, cfg.kind, cfg.name
        )));
    }
    match (mode, objective) {
        (Mode::Feasibility, Objective::ZDiff) => {}
        (Mode::Feasibility, _) => return Err(Error::Contract("feasibility mode minimises z_diff".into())),
        (_, Objective::ZDiff) => return Err(Error::Contract("z_diff is only used in feasibility mode".into())),
        (Mode::FixedSequence, Objective::BandExcess) => {
            return Err(Error::Contract("band excess needs slack mode".into()))
        }
        (Mode::Slack(b), _) if !(b >= 0.0 && b.is_finite()) => {
            return Err(Error::Domain(format!("slack must be nonnegative, got {b}")))
        }
        _ => {}
    }
    let with_shunt = reference.has_shunt();
    if with_shunt && cfg.strand.k_r.is_none() {
        return Err(Error::UnsupportedGeometry(format!(
            "{}: shunt admittance needs a packing coefficient (N={})",
            cfg.name, cfg.strand.n
        )));
    }

    // Fixed slack of zero is the fixed-sequence problem; only diagonal
    // entries are pinned and R00 is released for three-conductor lines.
    let pinned = match mode {
        Mode::FixedSequence => true,
        Mode::Slack(b) => b == 0.0,
        Mode::Feasibility => false,
    };
    let included: Vec<(Component, f64)> = reference
        .components()
        .into_iter()
        .filter(|(c, _)| !(pinned && cfg.n_cond == 3 && *c == Component::R00))
        .collect();
    if included.is_empty() {
        return Err(Error::Contract("no reference components to match".into()));
    }

    let b = &catalog.bounds;
    let decisions = decision_variables(combination);
    let mut boxes: BTreeMap<Variable, (f64, f64)> = BTreeMap::new();
    let n = cfg.strand.n as f64 * std::f64::consts::PI;
    let (amin, amax) = b.area_range(cfg.strand.k_r.is_none());
    boxes.insert(
        Variable::Radius,
        (b.r_min.max((amin / n).sqrt()), b.r_max.min((amax / n).sqrt())),
    );
    boxes.insert(Variable::Temperature, (b.t_min, b.t_max));
    boxes.insert(Variable::TNom, (b.t_nom_min, b.t_nom_max));
    for v in [Variable::U1, Variable::U2, Variable::V1] {
        boxes.insert(v, (0.0, f64::INFINITY));
    }
    boxes.insert(Variable::VRef, b.v_ref_range(cfg.kind));

    let mut fixed: BTreeMap<Variable, f64> = BTreeMap::new();
    if let Some(t) = options.temperature {
        fixed.insert(Variable::Temperature, t);
    }
    if !with_shunt {
        let v = match options.v_ref {
            Some(v) => v,
            None => catalog
                .standard_geometry(&cfg.name)
                .map(|g| g.v_ref)
                .ok_or_else(|| Error::Domain(format!("{}: no standard reference height", cfg.name)))?,
        };
        fixed.insert(Variable::VRef, v);
    } else if let Some(v) = options.v_ref {
        fixed.insert(Variable::VRef, v);
    }

    // Geometry rows: substitute fixed values, turn single free variables
    // into boxes, keep the rest as linear rows.
    let mut infeasible = None;
    let mut multi: Vec<(String, Vec<(Variable, f64)>, f64)> = Vec::new();
    for lc in geometry_constraints(cfg, b).constraints {
        let mut terms = Vec::new();
        let mut constant = lc.constant;
        for (g, c) in &lc.terms {
            let v = Variable::from_geometry(*g);
            match fixed.get(&v) {
                Some(x) => constant += c * x,
                None => terms.push((v, *c)),
            }
        }
        let derived = |v: Variable| !decisions.contains(&v);
        match terms.as_slice() {
            [] if constant < -1e-9 => {
                infeasible.get_or_insert(format!("fixed values violate {}", lc.rule));
            }
            [] => {}
            [(v, c)] if !derived(*v) => {
                let e = boxes.get_mut(v).expect("box exists");
                let bound = -constant / c;
                if *c > 0.0 {
                    e.0 = e.0.max(bound);
                } else {
                    e.1 = e.1.min(bound);
                }
            }
            _ => multi.push((lc.rule.clone(), terms, constant)),
        }
    }
    // Interval propagation through the remaining rows.
    for _ in 0..3 {
        for (_, terms, constant) in &multi {
            for (i, (v, c)) in terms.iter().enumerate() {
                if !decisions.contains(v) {
                    continue;
                }
                let mut rest_max = *constant;
                let mut finite = true;
                for (j, (w, d)) in terms.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    match boxes.get(w) {
                        Some(&(lo, hi)) if decisions.contains(w) => {
                            let m = if *d > 0.0 { d * hi } else { d * lo };
                            finite &= m.is_finite();
                            rest_max += m;
                        }
                        _ => finite = false,
                    }
                }
                if !finite {
                    continue;
                }
                let e = boxes.get_mut(v).expect("box exists");
                if *c > 0.0 {
                    e.0 = e.0.max(-rest_max / c);
                } else {
                    e.1 = e.1.min(-rest_max / c);
                }
            }
        }
    }

    let mut free = Vec::new();
    let mut fixed_out = Vec::new();
    for v in &decisions {
        let (lo, hi) = boxes[v];
        if let Some(&x) = fixed.get(v) {
            if x < lo - 1e-9 * lo.abs().max(1.0) || x > hi + 1e-9 * hi.abs().max(1.0) {
                infeasible.get_or_insert(format!("{} = {x} lies outside [{lo}, {hi}]", v.name()));
            }
            fixed_out.push((*v, x));
        } else {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::Contract(format!("{} has an unbounded box", v.name())));
            }
            if lo > hi {
                infeasible.get_or_insert(format!("{} box [{lo}, {hi}] is empty", v.name()));
            }
            free.push(FreeVariable {
                variable: *v,
                lower: lo,
                upper: hi.max(lo),
            });
        }
    }

    let objective_range = match objective {
        Objective::Minimize(v) | Objective::Maximize(v) => {
            if v == Variable::U1 && !decisions.contains(&v) {
                (b.u_min_cable, b.u_max_cable)
            } else if decisions.contains(&v) {
                let (lo, hi) = boxes[&v];
                if hi > lo {
                    (lo, hi)
                } else {
                    (lo, lo + 1.0)
                }
            } else {
                return Err(Error::Contract(format!("{} is not a variable of {}", v.name(), cfg.name)));
            }
        }
        _ => (0.0, 1.0),
    };

    let mut rows = Vec::new();
    let mut aux_names = Vec::new();
    let dev = |k: usize, r: f64| vec![(Basis::Component(k), 1.0 / r)];
    let scale = geometry_scale(cfg.kind);
    let objective_row = match (mode, objective) {
        (Mode::Feasibility, _) => {
            let kk = included.len() as f64;
            let mut obj = Vec::new();
            for (k, (c, r)) in included.iter().enumerate() {
                let a = aux_names.len();
                aux_names.push(format!("aux[{}]", c.name()));
                rows.push(Row {
                    name: format!("{}_upper", c.name()),
                    terms: vec![(Basis::Component(k), -1.0 / r), (Basis::Aux(a), 1.0)],
                    constant: 1.0,
                    kind: ConstraintKind::NonNegative,
                    geometry: false,
                });
                rows.push(Row {
                    name: format!("{}_lower", c.name()),
                    terms: vec![(Basis::Component(k), 1.0 / r), (Basis::Aux(a), 1.0)],
                    constant: -1.0,
                    kind: ConstraintKind::NonNegative,
                    geometry: false,
                });
                obj.push((Basis::Aux(a), 1.0 / kk));
            }
            Row {
                name: "z_diff".into(),
                terms: obj,
                constant: 0.0,
                kind: ConstraintKind::Equality,
                geometry: false,
            }
        }
        (Mode::Slack(beta), Objective::BandExcess) => {
            let mut obj = Vec::new();
            for (k, (c, r)) in included.iter().enumerate() {
                let a = aux_names.len();
                aux_names.push(format!("excess[{}]", c.name()));
                rows.push(Row {
                    name: format!("{}_upper", c.name()),
                    terms: vec![(Basis::Component(k), -1.0 / r), (Basis::Aux(a), 1.0)],
                    constant: 1.0 + beta,
                    kind: ConstraintKind::NonNegative,
                    geometry: false,
                });
                rows.push(Row {
                    name: format!("{}_lower", c.name()),
                    terms: vec![(Basis::Component(k), 1.0 / r), (Basis::Aux(a), 1.0)],
                    constant: beta - 1.0,
                    kind: ConstraintKind::NonNegative,
                    geometry: false,
                });
                obj.push((Basis::Aux(a), 1.0));
            }
            Row {
                name: "band_excess".into(),
                terms: obj,
                constant: 0.0,
                kind: ConstraintKind::Equality,
                geometry: false,
            }
        }
        (_, Objective::Minimize(v)) | (_, Objective::Maximize(v)) => {
            let beta = match mode {
                Mode::Slack(b) if !pinned => Some(b),
                _ => None,
            };
            for (k, (c, r)) in included.iter().enumerate() {
                match beta {
                    None => rows.push(Row {
                        name: format!("{}_fixed", c.name()),
                        terms: dev(k, *r),
                        constant: -1.0,
                        kind: ConstraintKind::Equality,
                        geometry: false,
                    }),
                    Some(beta) => {
                        rows.push(Row {
                            name: format!("{}_upper", c.name()),
                            terms: vec![(Basis::Component(k), -1.0 / r)],
                            constant: 1.0 + beta,
                            kind: ConstraintKind::NonNegative,
                            geometry: false,
                        });
                        rows.push(Row {
                            name: format!("{}_lower", c.name()),
                            terms: dev(k, *r),
                            constant: beta - 1.0,
                            kind: ConstraintKind::NonNegative,
                            geometry: false,
                        });
                    }
                }
            }
            let sign = if matches!(objective, Objective::Maximize(_)) { -1.0 } else { 1.0 };
            let (lo, hi) = objective_range;
            Row {
                name: format!("{}{}", if sign > 0.0 { "min " } else { "max " }, v.name()),
                terms: vec![(Basis::Quantity(v), sign / (hi - lo))],
                constant: -sign * lo / (hi - lo),
                kind: ConstraintKind::Equality,
                geometry: false,
            }
        }
        (_, Objective::ZDiff) | (_, Objective::BandExcess) => unreachable!("checked above"),
    };
    for (rule, terms, constant) in multi {
        rows.push(Row {
            name: rule,
            terms: terms.iter().map(|(v, c)| (Basis::Quantity(*v), c / scale)).collect(),
            constant: constant / scale,
            kind: ConstraintKind::NonNegative,
            geometry: true,
        });
    }

    Ok(InverseModel {
        combination: combination.clone(),
        constants: catalog.constants.clone(),
        reference: *reference,
        mode,
        objective,
        with_shunt,
        corrections: options.corrections,
        frequency: options.frequency.unwrap_or(catalog.constants.f_fund),
        included,
        free,
        fixed: fixed_out,
        infeasible_bounds: infeasible,
        rows,
        objective_row,
        aux_names,
    })
}

struct Evaluated<S> {
    components: Vec<S>,
    lifted: LineExpressions<S>,
    decision: Decision<S>,
}

impl InverseModel {
    fn line_model(&self) -> LineModel<'_> {
        LineModel {
            constants: &self.constants,
            config: &self.combination.config,
            material: &self.combination.material,
            corrections: self.corrections,
            frequency: self.frequency,
        }
    }

    /// Number of free decision variables.
    pub fn degrees_of_freedom(&self) -> usize {
        self.free.len()
    }

    /// The reported variable set: decision variables plus the derived core
    /// spacing of cables.
    pub fn phi(&self) -> Vec<Variable> {
        let mut v = decision_variables(&self.combination);
        if !v.contains(&Variable::U1) {
            v.insert(2, Variable::U1);
        }
        v
    }

    pub fn is_fixed(&self, v: Variable) -> bool {
        self.fixed.iter().any(|(w, _)| *w == v)
    }

    pub fn num_aux(&self) -> usize {
        self.aux_names.len()
    }

    fn decision<S: Scalar>(&self, prim: &[S]) -> Decision<S> {
        let get = |v: Variable| -> Option<S> {
            if let Some(i) = self.free.iter().position(|f| f.variable == v) {
                return Some(prim[i]);
            }
            self.fixed.iter().find(|(w, _)| *w == v).map(|(_, x)| S::constant(*x))
        };
        Decision {
            r: get(Variable::Radius).expect("radius"),
            t: get(Variable::Temperature).expect("temperature"),
            t_nom: get(Variable::TNom),
            u1: get(Variable::U1),
            u2: get(Variable::U2),
            v1: get(Variable::V1),
            v_ref: get(Variable::VRef).expect("reference height"),
        }
    }

    fn evaluate<S: Scalar>(&self, prim: &[S]) -> Option<Evaluated<S>> {
        let decision = self.decision(prim);
        let lifted = self.line_model().evaluate(&decision, self.with_shunt);
        let mut components = Vec::with_capacity(self.included.len());
        for (c, _) in &self.included {
            let v = match c {
                Component::R00 => lifted.z012[0][0].re,
                Component::X00 => lifted.z012[0][0].im,
                Component::R11 => lifted.z012[1][1].re,
                Component::X11 => lifted.z012[1][1].im,
                Component::B00 => lifted.y012.as_ref()?[0][0].im,
                Component::B11 => lifted.y012.as_ref()?[1][1].im,
            };
            if !v.value().is_finite() {
                return None;
            }
            components.push(v);
        }
        Some(Evaluated {
            components,
            lifted,
            decision,
        })
    }

    fn quantity<S: Scalar>(&self, v: Variable, e: &Evaluated<S>) -> S {
        let d = &e.decision;
        match v {
            Variable::Radius => d.r,
            Variable::Temperature => d.t,
            Variable::U1 => e.lifted.u1,
            Variable::U2 => d.u2.unwrap_or(S::zero()),
            Variable::V1 => d.v1.unwrap_or(S::zero()),
            Variable::VRef => d.v_ref,
            Variable::TNom => d.t_nom.unwrap_or(S::zero()),
        }
    }

    fn row_value<S: Scalar>(&self, row: &Row, e: &Evaluated<S>, aux: &[f64]) -> S {
        let mut acc = S::constant(row.constant);
        for (b, c) in &row.terms {
            acc = match b {
                Basis::Component(k) => acc + e.components[*k] * *c,
                Basis::Quantity(v) => acc + self.quantity(*v, e) * *c,
                Basis::Aux(a) => acc + aux[*a] * *c,
            };
        }
        acc
    }

    /// Physical values of the free variables from scaled coordinates.
    pub fn unscale(&self, z: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .zip(z)
            .map(|(f, t)| f.lower + (f.upper - f.lower) * t)
            .collect()
    }

    pub fn scale(&self, point: &Point) -> Option<Vec<f64>> {
        self.free
            .iter()
            .map(|f| {
                let x = *point.get(&f.variable)?;
                let w = f.upper - f.lower;
                Some(if w > 0.0 { ((x - f.lower) / w).clamp(0.0, 1.0) } else { 0.0 })
            })
            .collect()
    }

    /// Decision values (free and fixed) at scaled coordinates.
    pub fn point(&self, z: &[f64]) -> Point {
        let mut p: Point = self.fixed.iter().copied().collect();
        for (f, x) in self.free.iter().zip(self.unscale(z)) {
            p.insert(f.variable, x);
        }
        p
    }

    fn prim_from_point(&self, point: &Point) -> Result<Vec<f64>> {
        self.free
            .iter()
            .map(|f| {
                point
                    .get(&f.variable)
                    .copied()
                    .ok_or_else(|| Error::Contract(format!("point lacks {}", f.variable.name())))
            })
            .collect()
    }

    /// Every intermediate quantity at a point.
    pub fn lift(&self, point: &Point) -> Result<LineExpressions<f64>> {
        let prim = self.prim_from_point(point)?;
        Ok(self.line_model().evaluate(&self.decision(&prim), self.with_shunt))
    }

    /// Sequence components computed through the real-form expressions.
    pub fn sequence_at(&self, point: &Point) -> Result<SequenceComponents> {
        let l = self.lift(point)?;
        Ok(SequenceComponents {
            r00: l.z012[0][0].re,
            x00: l.z012[0][0].im,
            r11: l.z012[1][1].re,
            x11: l.z012[1][1].im,
            b00: l.y012.as_ref().map(|y| y[0][0].im),
            b11: l.y012.as_ref().map(|y| y[1][1].im),
        })
    }

    /// The forward-model line at a point.
    pub fn line_spec(&self, point: &Point) -> Result<LineSpec> {
        let cfg = &self.combination.config;
        let get = |v: Variable| point.get(&v).copied();
        let kr_cable = cfg.family.is_cable() && cfg.strand.k_r.is_some();
        let geometry = GeometryVars {
            u1: if kr_cable { None } else { get(Variable::U1) },
            u2: get(Variable::U2),
            v1: get(Variable::V1),
            v_ref: get(Variable::VRef)
                .ok_or_else(|| Error::Contract("point lacks v_ref".into()))?,
        };
        Ok(LineSpec {
            config: cfg.clone(),
            material: self.combination.material.clone(),
            r: get(Variable::Radius).ok_or_else(|| Error::Contract("point lacks r".into()))?,
            temperature: get(Variable::Temperature)
                .ok_or_else(|| Error::Contract("point lacks T".into()))?,
            t_nom: get(Variable::TNom),
            geometry,
        })
    }

    /// Variables of the full-space model.
    pub fn variables(&self) -> Vec<ModelVariable> {
        let mut out = Vec::new();
        for v in decision_variables(&self.combination) {
            let role = if self.is_fixed(v) { VariableRole::Fixed } else { VariableRole::Decision };
            out.push(ModelVariable {
                name: v.name().into(),
                role,
            });
        }
        if let Some(point) = self.midpoint() {
            if let Ok(l) = self.lift(&point) {
                for r in self.structural_residuals_from(&point, &l) {
                    out.push(ModelVariable {
                        name: r.name,
                        role: VariableRole::Intermediate,
                    });
                }
            }
        }
        for a in &self.aux_names {
            out.push(ModelVariable {
                name: a.clone(),
                role: VariableRole::Auxiliary,
            });
        }
        out
    }

    fn midpoint(&self) -> Option<Point> {
        let z = vec![0.5; self.free.len()];
        Some(self.point(&z))
    }

    /// Residuals of the defining equalities in real form at a point. Each
    /// row defines the intermediate quantity it is named after.
    pub fn structural_residuals(&self, point: &Point) -> Result<Vec<Residual>> {
        let l = self.lift(point)?;
        Ok(self.structural_residuals_from(point, &l))
    }

    fn structural_residuals_from(&self, point: &Point, l: &LineExpressions<f64>) -> Vec<Residual> {
        let k = &self.constants;
        let cfg = &self.combination.config;
        let m = &self.combination.material;
        let mut out = Vec::new();
        let mut push = |name: String, terms: &[f64]| {
            let big = terms.iter().fold(0.0f64, |a, t| a.max(t.abs()));
            let sum: f64 = terms.iter().sum();
            out.push(Residual {
                name,
                value: sum / (1.0 + big),
            });
        };
        let r = point[&Variable::Radius];
        let t = point[&Variable::Temperature];
        let n = cfg.strand.n as f64;
        push("A".into(), &[l.area, -n * std::f64::consts::PI * r * r]);
        push("R_dc".into(), &[l.r_dc * l.area, -m.rho * (1.0 + m.alpha * (t - 20.0))]);
        let f = (1.0 + self.corrections.skin) * (1.0 + self.corrections.proximity);
        push("R_ac".into(), &[l.r_ac, -f * l.r_dc]);
        push("GMR".into(), &[l.gmr, -cfg.strand.k_gmr * r]);
        if let (Some(kr), Some(c)) = (cfg.strand.k_r, l.core) {
            push("R".into(), &[c, -kr * r]);
            if let (Some(nom), Some(tn)) = (l.nominal, point.get(&Variable::TNom)) {
                push("R_nom".into(), &[nom, -c, -tn]);
                if cfg.family.is_cable() {
                    push("u1".into(), &[l.u1, -nom]);
                }
            }
        }

        // Coordinates follow the forward placement rules.
        let g = GeometryVars {
            u1: Some(l.u1),
            u2: point.get(&Variable::U2).copied(),
            v1: point.get(&Variable::V1).copied(),
            v_ref: point[&Variable::VRef],
        };
        let nc = l.x.len();
        if let Ok(c) = place_conductors(cfg, &g) {
            for i in 0..nc {
                push(format!("x[{i}]"), &[l.x[i], -c.x[i]]);
                push(format!("y[{i}]"), &[l.y[i], -c.y[i]]);
            }
        }
        for i in 0..nc {
            push(format!("S[{i},{i}]"), &[l.s[i][i] * l.s[i][i], -4.0 * l.y[i] * l.y[i]]);
            for j in 0..nc {
                if i == j {
                    continue;
                }
                let dx2 = (l.x[i] - l.x[j]).powi(2);
                push(format!("D[{i},{j}]"), &[l.d[i][j] * l.d[i][j], -dx2, -(l.y[i] - l.y[j]).powi(2)]);
                push(format!("S[{i},{j}]"), &[l.s[i][j] * l.s[i][j], -dx2, -(l.y[i] + l.y[j]).powi(2)]);
            }
        }
        for i in 0..nc {
            for j in 0..nc {
                let z = l.z[i][j];
                if i == j {
                    push(format!("Zcar_re[{i},{j}]"), &[z.re, -l.r_ac, -k.k1]);
                    push(
                        format!("Zcar_im[{i},{j}]"),
                        &[z.im, -k.k2 * ((1.0 / (k.k3 * l.gmr)).ln() + k.k4)],
                    );
                } else {
                    push(format!("Zcar_re[{i},{j}]"), &[z.re, -k.k1]);
                    push(
                        format!("Zcar_im[{i},{j}]"),
                        &[z.im, -k.k2 * ((1.0 / (k.k3 * l.d[i][j])).ln() + k.k4)],
                    );
                }
            }
        }

        let cx = |c: &super::realform::Cx<f64>| Complex64::new(c.re, c.im);
        let abc: Vec<Vec<Complex64>> = match &l.zkr {
            Some(kr) => {
                let znn = cx(&l.z[3][3]);
                for i in 0..3 {
                    for j in 0..3 {
                        // (Zkr_ij - Z_ij) Znn + Z_in Z_nj = 0
                        let a = (cx(&kr[i][j]) - cx(&l.z[i][j])) * znn;
                        let b = cx(&l.z[i][3]) * cx(&l.z[3][j]);
                        push(format!("Zkr_re[{i},{j}]"), &[a.re, b.re]);
                        push(format!("Zkr_im[{i},{j}]"), &[a.im, b.im]);
                    }
                }
                kr.iter().map(|row| row.iter().map(cx).collect()).collect()
            }
            None => (0..3).map(|i| (0..3).map(|j| cx(&l.z[i][j])).collect()).collect(),
        };
        let tm = TransformMatrix::new();
        let seq_rows = |name: &str, mabc: &[Vec<Complex64>], m012: &[Vec<Complex64>], push: &mut dyn FnMut(String, &[f64])| {
            // A M012 = Mabc A
            for i in 0..3 {
                for j in 0..3 {
                    let mut lhs = Complex64::new(0.0, 0.0);
                    let mut rhs = Complex64::new(0.0, 0.0);
                    for q in 0..3 {
                        lhs += tm.a[(i, q)] * m012[q][j];
                        rhs += mabc[i][q] * tm.a[(q, j)];
                    }
                    push(format!("{name}_re[{i},{j}]"), &[lhs.re, -rhs.re]);
                    push(format!("{name}_im[{i},{j}]"), &[lhs.im, -rhs.im]);
                }
            }
        };
        let z012: Vec<Vec<Complex64>> = l.z012.iter().map(|r| r.iter().map(cx).collect()).collect();
        seq_rows("Z012", &abc, &z012, &mut push);

        if let (Some(p), Some(c), Some(y012), Some(rc)) = (&l.p, &l.c, &l.y012, l.core) {
            for i in 0..nc {
                for j in 0..nc {
                    let arg = if i == j { l.s[i][i] / rc } else { l.s[i][j] / l.d[i][j] };
                    push(format!("P[{i},{j}]"), &[p[i][j], -k.k5 * arg.ln()]);
                    let mut terms: Vec<f64> = (0..nc).map(|q| c[i][q] * p[q][j]).collect();
                    terms.push(if i == j { -1.0 } else { 0.0 });
                    push(format!("C[{i},{j}]"), &terms);
                }
            }
            let w = 2.0 * std::f64::consts::PI * self.frequency;
            let yabc: Vec<Vec<Complex64>> = (0..3)
                .map(|i| (0..3).map(|j| Complex64::new(0.0, w * c[i][j])).collect())
                .collect();
            let y: Vec<Vec<Complex64>> = y012.iter().map(|r| r.iter().map(cx).collect()).collect();
            seq_rows("Y012", &yabc, &y, &mut push);
        }
        out
    }

    /// Operational rows (sequence matching and geometry) at a point with
    /// auxiliary values, as `(name, value, kind)`.
    pub fn operational_values(&self, point: &Point, aux: &[f64]) -> Result<Vec<(String, f64, ConstraintKind)>> {
        let prim = self.prim_from_point(point)?;
        let e = self
            .evaluate(&prim)
            .ok_or_else(|| Error::Domain("model cannot be evaluated at this point".into()))?;
        Ok(self
            .rows
            .iter()
            .map(|r| (r.name.clone(), self.row_value(r, &e, aux), r.kind))
            .collect())
    }

    /// Objective at a point with auxiliary values.
    pub fn objective_value(&self, point: &Point, aux: &[f64]) -> Result<f64> {
        let prim = self.prim_from_point(point)?;
        let e = self
            .evaluate(&prim)
            .ok_or_else(|| Error::Domain("model cannot be evaluated at this point".into()))?;
        Ok(self.row_value(&self.objective_row, &e, aux))
    }

    /// Relative deviations `a / ref - 1` of the included components.
    pub fn deviations(&self, point: &Point) -> Result<Vec<f64>> {
        let prim = self.prim_from_point(point)?;
        let e = self
            .evaluate(&prim)
            .ok_or_else(|| Error::Domain("model cannot be evaluated at this point".into()))?;
        Ok(e.components
            .iter()
            .zip(&self.included)
            .map(|(a, (_, r))| a / r - 1.0)
            .collect())
    }

    /// Geometry rows at a point; all must be nonnegative.
    pub(crate) fn geometry_ok(&self, z: &[f64]) -> bool {
        let prim = self.unscale(z);
        let Some(e) = self.evaluate(&prim) else { return false };
        self.rows
            .iter()
            .filter(|r| r.geometry)
            .all(|r| self.row_value(r, &e, &[]) >= 0.0)
    }

    /// Starting auxiliary values that make the epigraph rows feasible.
    pub(crate) fn initial_aux(&self, z: &[f64]) -> Vec<f64> {
        let prim = self.unscale(z);
        let devs: Vec<f64> = match self.evaluate(&prim) {
            Some(e) => e
                .components
                .iter()
                .zip(&self.included)
                .map(|(a, (_, r))| a / r - 1.0)
                .collect(),
            None => vec![1.0; self.included.len()],
        };
        match (self.mode, self.objective) {
            (Mode::Feasibility, _) => devs.iter().map(|d| d.abs() + 0.01).collect(),
            (Mode::Slack(b), Objective::BandExcess) => {
                devs.iter().map(|d| (d.abs() - b).max(0.0) + 0.01).collect()
            }
            _ => Vec::new(),
        }
    }

    fn nlp_eval<S: Scalar>(&self, x: &[f64], prim: &[S]) -> Option<(S, Vec<S>)> {
        let e = self.evaluate(prim)?;
        let aux = &x[self.free.len()..];
        let obj = self.row_value(&self.objective_row, &e, aux);
        let rows: Vec<S> = self.rows.iter().map(|r| self.row_value(r, &e, aux)).collect();
        if !obj.value().is_finite() || rows.iter().any(|r| !r.value().is_finite()) {
            return None;
        }
        Some((obj, rows))
    }

    fn aux_gradient(&self, row: &Row) -> Vec<(usize, f64)> {
        row.terms
            .iter()
            .filter_map(|(b, c)| match b {
                Basis::Aux(a) => Some((self.free.len() + a, *c)),
                _ => None,
            })
            .collect()
    }
}

/// Largest number of free decision variables in any configuration.
pub(crate) const MAX_FREE: usize = 6;

impl NlpProblem for InverseModel {
    fn num_variables(&self) -> usize {
        self.free.len() + self.aux_names.len()
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let nf = self.free.len();
        let mut lo = vec![0.0; nf];
        let mut hi = vec![1.0; nf];
        for (i, f) in self.free.iter().enumerate() {
            if f.upper <= f.lower {
                hi[i] = 0.0;
            }
        }
        lo.extend(std::iter::repeat(0.0).take(self.aux_names.len()));
        hi.extend(std::iter::repeat(f64::INFINITY).take(self.aux_names.len()));
        (lo, hi)
    }

    fn constraint_kinds(&self) -> Vec<ConstraintKind> {
        self.rows.iter().map(|r| r.kind).collect()
    }

    fn values(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let prim = self.unscale(&x[..self.free.len()]);
        self.nlp_eval::<f64>(x, &prim)
    }

    fn derivatives(&self, x: &[f64]) -> Option<Derivatives> {
        let nf = self.free.len();
        let n = self.num_variables();
        assert!(nf <= MAX_FREE, "at most {MAX_FREE} free variables");
        let phys = self.unscale(&x[..nf]);
        let prim: Vec<Dual2<MAX_FREE>> = phys
            .iter()
            .enumerate()
            .map(|(i, v)| Dual2::variable(*v, i, self.free[i].upper - self.free[i].lower))
            .collect();
        let (obj, rows) = self.nlp_eval(x, &prim)?;

        let grad = |d: &Dual2<MAX_FREE>, row: &Row| {
            let mut g = DVector::zeros(n);
            for i in 0..nf {
                g[i] = d.g[i];
            }
            for (j, c) in self.aux_gradient(row) {
                g[j] += c;
            }
            g
        };
        let hess = |d: &Dual2<MAX_FREE>| {
            let mut h = DMatrix::zeros(n, n);
            for i in 0..nf {
                for j in 0..nf {
                    h[(i, j)] = d.h[i][j];
                }
            }
            h
        };

        let m = rows.len();
        let mut jac = DMatrix::zeros(m, n);
        let mut chess = Vec::with_capacity(m);
        let mut cvals = DVector::zeros(m);
        for (k, (d, row)) in rows.iter().zip(&self.rows).enumerate() {
            cvals[k] = d.v;
            jac.set_row(k, &grad(d, row).transpose());
            chess.push(hess(d));
        }
        Some(Derivatives {
            objective: obj.v,
            gradient: grad(&obj, &self.objective_row),
            hessian: hess(&obj),
            constraints: cvals,
            jacobian: jac,
            constraint_hessians: chess,
        })
    }
}

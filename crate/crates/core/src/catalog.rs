//! Constants, material and conductor standards, configurations and variable
//! bounds.
//!
//! A catalog is one JSON document. The bundled default reproduces the
//! standard LV overhead and cable tables; utilities can ship their own file
//! with extra conductors without recompiling.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../data/catalog.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarsonConstants {
    /// Resistance offset [ohm/km].
    pub k1: f64,
    /// Reactance scale [ohm/km].
    pub k2: f64,
    /// Inverse-length scale [1/mm].
    pub k3: f64,
    /// Dimensionless offset.
    pub k4: f64,
    /// Potential coefficient scale [km/uF].
    pub k5: f64,
    /// Fundamental frequency [Hz].
    #[serde(default = "default_frequency")]
    pub f_fund: f64,
}

fn default_frequency() -> f64 {
    50.0
}

/// The modified Carson constants at 50 Hz.
pub fn carson_constants() -> CarsonConstants {
    CarsonConstants {
        k1: 0.049348,
        k2: 0.062832,
        k3: 3.28084e-3,
        k4: 8.0252,
        k5: 17.98742,
        f_fund: 50.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub name: String,
    /// Resistivity at 20 degC [1e-9 ohm m].
    pub rho: f64,
    /// Temperature coefficient [1/degC].
    pub alpha: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrandClass {
    #[serde(rename = "N")]
    pub n: u32,
    /// GMR over strand radius.
    pub k_gmr: f64,
    /// Bare core radius over strand radius; absent for sector conductors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_r: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    Overhead,
    Cable,
}

impl fmt::Display for LineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LineKind::Overhead => "overhead",
            LineKind::Cable => "cable",
        })
    }
}

impl std::str::FromStr for LineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "overhead" | "oh" => Ok(LineKind::Overhead),
            "cable" => Ok(LineKind::Cable),
            other => Err(Error::Domain(format!("unknown line kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "OH-horizontal-4w")]
    Horizontal4w,
    #[serde(rename = "OH-neutral-under")]
    NeutralUnder,
    #[serde(rename = "OH-horizontal-3w")]
    Horizontal3w,
    #[serde(rename = "OH-triangular")]
    Triangular,
    #[serde(rename = "OH-horizontal-2w")]
    Horizontal2w,
    #[serde(rename = "cable-4core")]
    Cable4,
    #[serde(rename = "cable-3core")]
    Cable3,
    #[serde(rename = "cable-2core")]
    Cable2,
}

impl Family {
    pub fn n_cond(self) -> usize {
        match self {
            Family::Horizontal4w | Family::NeutralUnder | Family::Cable4 => 4,
            Family::Horizontal3w | Family::Triangular | Family::Cable3 => 3,
            Family::Horizontal2w | Family::Cable2 => 2,
        }
    }

    pub fn kind(self) -> LineKind {
        match self {
            Family::Cable4 | Family::Cable3 | Family::Cable2 => LineKind::Cable,
            _ => LineKind::Overhead,
        }
    }

    pub fn is_cable(self) -> bool {
        self.kind() == LineKind::Cable
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSpec {
    pub name: String,
    pub kind: LineKind,
    pub family: Family,
    pub n_cond: usize,
    /// Strand count; resolved to [`ConfigSpec::strand`] on load.
    #[serde(rename = "N")]
    pub strands: u32,
    /// Triangular apex angle [deg].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Materials this configuration is enumerated with during recovery.
    #[serde(default)]
    pub materials: Vec<String>,
    #[serde(skip)]
    pub strand: StrandClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductorCatalogEntry {
    pub code: String,
    pub kind: LineKind,
    /// Conductor counts this product is sold in.
    pub n_cond: Vec<usize>,
    /// Standard cross-section [mm^2].
    pub area_std: f64,
    /// Standard strand radius [mm].
    pub r_std: f64,
    #[serde(rename = "N")]
    pub strands: u32,
    pub material: String,
    /// Insulation thickness [mm]; cables only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_nom_std: Option<f64>,
    /// Sector-shaped (non-circular) strands.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sector: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub r_min: f64,
    pub r_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub a_sector_min: f64,
    pub a_sector_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_nom_min: f64,
    pub t_nom_max: f64,
    pub d_min_oh: f64,
    pub u_max_oh: f64,
    pub u_min_cable: f64,
    pub u_max_cable: f64,
    pub v_ref_oh_min: f64,
    pub v_ref_oh_max: f64,
    pub v_ref_cable_min: f64,
    pub v_ref_cable_max: f64,
}

impl BoundSet {
    pub fn v_ref_range(&self, kind: LineKind) -> (f64, f64) {
        match kind {
            LineKind::Overhead => (self.v_ref_oh_min, self.v_ref_oh_max),
            LineKind::Cable => (self.v_ref_cable_min, self.v_ref_cable_max),
        }
    }

    pub fn area_range(&self, sector: bool) -> (f64, f64) {
        if sector {
            (self.a_sector_min, self.a_sector_max)
        } else {
            (self.a_min, self.a_max)
        }
    }

    fn pairs(&self) -> [(&'static str, f64, f64); 9] {
        [
            ("r", self.r_min, self.r_max),
            ("a", self.a_min, self.a_max),
            ("a_sector", self.a_sector_min, self.a_sector_max),
            ("t", self.t_min, self.t_max),
            ("t_nom", self.t_nom_min, self.t_nom_max),
            ("u_cable", self.u_min_cable, self.u_max_cable),
            ("v_ref_oh", self.v_ref_oh_min, self.v_ref_oh_max),
            ("v_ref_cable", self.v_ref_cable_min, self.v_ref_cable_max),
            ("d_min_oh/u_max_oh", self.d_min_oh, self.u_max_oh),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardGeometry {
    pub config: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v1: Option<f64>,
    pub v_ref: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub constants: CarsonConstants,
    pub materials: Vec<MaterialSpec>,
    pub strand_classes: Vec<StrandClass>,
    pub configs: Vec<ConfigSpec>,
    pub conductors: Vec<ConductorCatalogEntry>,
    pub bounds: BoundSet,
    pub standard_geometries: Vec<StandardGeometry>,
}

/// One discrete hypothesis enumerated during recovery.
#[derive(Clone, Debug, PartialEq)]
pub struct Combination {
    pub config: ConfigSpec,
    pub material: MaterialSpec,
}

impl Combination {
    pub fn label(&self) -> String {
        format!("{}/{}", self.config.name, self.material.name)
    }
}

fn invalid(entry: impl Into<String>, rule: impl Into<String>) -> Error {
    Error::Validation {
        entry: entry.into(),
        rule: rule.into(),
    }
}

impl Catalog {
    /// The catalog shipped with the library.
    pub fn bundled() -> Catalog {
        Catalog::from_json(BUNDLED).expect("bundled catalog is valid")
    }

    pub fn from_json(text: &str) -> Result<Catalog> {
        let mut cat: Catalog = serde_json::from_str(text).map_err(|e| Error::Schema {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cat.resolve()?;
        cat.validate()?;
        Ok(cat)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    fn resolve(&mut self) -> Result<()> {
        for i in 0..self.configs.len() {
            let n = self.configs[i].strands;
            let class = self
                .strand_classes
                .iter()
                .find(|s| s.n == n)
                .cloned()
                .ok_or_else(|| invalid(&self.configs[i].name, format!("unknown strand class N={n}")))?;
            self.configs[i].strand = class;
        }
        Ok(())
    }

    /// Checks every type invariant; the first failure is reported.
    pub fn validate(&self) -> Result<()> {
        let c = &self.constants;
        for (name, v) in [("k1", c.k1), ("k2", c.k2), ("k3", c.k3), ("k4", c.k4), ("k5", c.k5)] {
            if !(v > 0.0) {
                return Err(invalid("constants", format!("{name} must be strictly positive")));
            }
        }
        if c.f_fund != 50.0 && c.f_fund != 60.0 {
            return Err(invalid("constants", "f_fund must be 50 or 60 Hz"));
        }
        for m in &self.materials {
            if !(m.rho > 0.0) {
                return Err(invalid(&m.name, "rho must be positive"));
            }
            if !(m.alpha > 0.0 && m.alpha < 0.01) {
                return Err(invalid(&m.name, "alpha must lie in (0, 0.01)"));
            }
        }
        for s in &self.strand_classes {
            let entry = format!("strand class N={}", s.n);
            if ![7, 19, 48].contains(&s.n) {
                return Err(invalid(entry, "N must be 7, 19 or 48"));
            }
            if !(s.k_gmr > 1.0) {
                return Err(invalid(entry, "K_gmr must exceed 1"));
            }
            match s.k_r {
                Some(k) if !(k > 1.0) => return Err(invalid(entry, "K_r must exceed 1")),
                None if s.n != 48 => return Err(invalid(entry, "K_r may only be absent for N=48")),
                _ => {}
            }
        }
        for cfg in &self.configs {
            if !(2..=4).contains(&cfg.n_cond) {
                return Err(invalid(&cfg.name, "n_cond must be 2, 3 or 4"));
            }
            if cfg.family.n_cond() != cfg.n_cond {
                return Err(invalid(&cfg.name, "family conductor count does not match n_cond"));
            }
            if cfg.family.kind() != cfg.kind {
                return Err(invalid(&cfg.name, "family does not match kind"));
            }
            match (cfg.family == Family::Triangular, cfg.theta) {
                (true, Some(t)) if t > 0.0 && t < 90.0 => {}
                (true, _) => return Err(invalid(&cfg.name, "triangular configs need theta in (0, 90)")),
                (false, Some(_)) => return Err(invalid(&cfg.name, "theta is only allowed for triangular configs")),
                (false, None) => {}
            }
            for m in &cfg.materials {
                self.material(m).map_err(|_| invalid(&cfg.name, format!("unknown material `{m}`")))?;
            }
        }
        for e in &self.conductors {
            self.material(&e.material)
                .map_err(|_| invalid(&e.code, format!("unknown material `{}`", e.material)))?;
            if !self.strand_classes.iter().any(|s| s.n == e.strands) {
                return Err(invalid(&e.code, format!("unknown strand class N={}", e.strands)));
            }
            if !(e.r_std > 0.0 && e.area_std > 0.0) {
                return Err(invalid(&e.code, "area and radius must be positive"));
            }
            if !e.sector {
                let a = crate::conductor::strand_area(e.strands, e.r_std)?;
                if (a - e.area_std).abs() / e.area_std > 0.01 {
                    return Err(invalid(&e.code, "area_std differs from N*pi*r_std^2 by more than 1%"));
                }
            }
            match (e.kind, e.t_nom_std) {
                (LineKind::Cable, None) => return Err(invalid(&e.code, "cables need t_nom_std")),
                (LineKind::Overhead, Some(_)) => return Err(invalid(&e.code, "overhead conductors have no insulation")),
                _ => {}
            }
        }
        for (name, lo, hi) in self.bounds.pairs() {
            if !(lo < hi) {
                return Err(invalid("bounds", format!("{name}: min must be strictly below max")));
            }
        }
        if !(self.bounds.d_min_oh > 0.0) {
            return Err(invalid("bounds", "d_min_oh must be positive"));
        }
        for sg in &self.standard_geometries {
            let cfg = self
                .config(&sg.config)
                .map_err(|_| invalid(&sg.config, "standard geometry for unknown config"))?;
            if let Some(vars) = crate::geometry::GeometryVars::from_standard(cfg, sg) {
                let cons = crate::geometry::geometry_constraints(cfg, &self.bounds);
                if let Some(v) = cons.violations(&vars).first() {
                    return Err(invalid(&sg.config, format!("standard geometry violates {}", v.rule)));
                }
            }
        }
        Ok(())
    }

    pub fn material(&self, name: &str) -> Result<&MaterialSpec> {
        self.materials
            .iter()
            .find(|m| m.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Domain(format!("unknown material `{name}`")))
    }

    pub fn config(&self, name: &str) -> Result<&ConfigSpec> {
        self.configs
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Domain(format!("unknown configuration `{name}`")))
    }

    pub fn conductor(&self, code: &str) -> Result<&ConductorCatalogEntry> {
        self.conductors
            .iter()
            .find(|c| c.code.eq_ignore_ascii_case(code))
            .ok_or_else(|| Error::Domain(format!("unknown conductor `{code}`")))
    }

    pub fn strand_class(&self, n: u32) -> Result<&StrandClass> {
        self.strand_classes
            .iter()
            .find(|s| s.n == n)
            .ok_or_else(|| Error::Domain(format!("unknown strand class N={n}")))
    }

    pub fn standard_geometry(&self, config: &str) -> Option<&StandardGeometry> {
        self.standard_geometries
            .iter()
            .find(|g| g.config.eq_ignore_ascii_case(config))
    }

    /// Catalog conductors that a combination could represent.
    pub fn conductors_for(&self, combination: &Combination) -> Vec<&ConductorCatalogEntry> {
        let cfg = &combination.config;
        self.conductors
            .iter()
            .filter(|e| {
                e.kind == cfg.kind
                    && e.strands == cfg.strands
                    && e.n_cond.contains(&cfg.n_cond)
                    && e.material.eq_ignore_ascii_case(&combination.material.name)
            })
            .collect()
    }

    /// The configuration a cable conductor is built in.
    pub fn cable_config_for(&self, entry: &ConductorCatalogEntry, n_cond: usize) -> Result<&ConfigSpec> {
        self.configs
            .iter()
            .find(|c| c.kind == LineKind::Cable && c.n_cond == n_cond && c.strands == entry.strands)
            .ok_or_else(|| Error::Domain(format!("no {n_cond}-core config with N={} for {}", entry.strands, entry.code)))
    }
}

/// Reads and validates a catalog file.
pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Catalog::from_json(&text)
}

/// Every (configuration, material) pair enumerated for a line kind.
///
/// Two-conductor families are never candidates.
pub fn candidate_combinations(kind: LineKind, catalog: &Catalog) -> Vec<Combination> {
    let mut out = Vec::new();
    for cfg in catalog.configs.iter().filter(|c| c.kind == kind && c.n_cond >= 3) {
        for m in &catalog.materials {
            if cfg.materials.iter().any(|x| x.eq_ignore_ascii_case(&m.name)) {
                out.push(Combination {
                    config: cfg.clone(),
                    material: m.clone(),
                });
            }
        }
    }
    out
}

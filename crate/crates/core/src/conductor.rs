//! Conductor cross-section, resistance, GMR and core radii.
//!
//! Units at this boundary: mm, mm^2, degC and ohm/km. Resistivities are
//! catalogued in 1e-9 ohm m, which makes `rho / A` come out directly in
//! ohm/km for A in mm^2.

use std::f64::consts::PI;

use serde::Serialize;

use crate::catalog::{MaterialSpec, StrandClass};
use crate::error::{Error, Result};

/// Cross-section of `n` circular strands of radius `r`.
pub fn strand_area(n: u32, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("strand radius must be nonnegative, got {r}")));
    }
    Ok(n as f64 * PI * r * r)
}

/// Strand radius giving cross-section `area` with `n` strands.
pub fn radius_from_area(n: u32, area: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::Domain(format!("area must be positive, got {area}")));
    }
    Ok((area / (n as f64 * PI)).sqrt())
}

/// DC resistance [ohm/km] at temperature `t` [degC].
pub fn dc_resistance(material: &MaterialSpec, area: f64, t: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::Domain(format!("area must be positive, got {area}")));
    }
    // 1e-9 ohm m / 1e-6 m^2 = 1e-3 ohm/m = 1 ohm/km
    Ok(material.rho * (1.0 + material.alpha * (t - 20.0)) / area)
}

/// AC resistance from skin and proximity factors.
pub fn ac_resistance(r_dc: f64, skin: f64, proximity: f64) -> f64 {
    (1.0 + skin) * (1.0 + proximity) * r_dc
}

pub fn gmr(strand: &StrandClass, r: f64) -> f64 {
    strand.k_gmr * r
}

/// Bare core radius `R` and insulated radius `R_nom` [mm].
pub fn core_radii(strand: &StrandClass, r: f64, t_nom: f64) -> Result<(f64, f64)> {
    let k = strand.k_r.ok_or_else(|| {
        Error::UnsupportedGeometry(format!(
            "no packing coefficient for N={} (sector-shaped strands)",
            strand.n
        ))
    })?;
    if !(r >= 0.0 && t_nom >= 0.0) {
        return Err(Error::Domain("radius and insulation must be nonnegative".into()));
    }
    let big_r = k * r;
    Ok((big_r, big_r + t_nom))
}

/// Core spacing used for sector-shaped cables: the radius of a circle with
/// the same copper area, plus insulation.
pub fn sector_equivalent_u1(n: u32, r: f64, t_nom: f64) -> f64 {
    r * (n as f64).sqrt() + t_nom
}

/// Skin and proximity correction factors; zero unless a correction model is
/// supplied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AcCorrections {
    pub skin: f64,
    pub proximity: f64,
}

/// Electrical characterization of one conductor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConductorState {
    pub r: f64,
    pub area: f64,
    pub temperature: f64,
    pub r_dc: f64,
    pub r_ac: f64,
    pub gmr: f64,
    /// Bare core radius; absent without a packing coefficient.
    pub core_radius: Option<f64>,
    pub nominal_radius: Option<f64>,
    pub t_nom: Option<f64>,
    pub skin: f64,
    pub proximity: f64,
}

impl ConductorState {
    pub fn evaluate(
        strand: &StrandClass,
        material: &MaterialSpec,
        r: f64,
        temperature: f64,
        t_nom: Option<f64>,
        corrections: AcCorrections,
    ) -> Result<ConductorState> {
        let area = strand_area(strand.n, r)?;
        let r_dc = dc_resistance(material, area, temperature)?;
        let r_ac = ac_resistance(r_dc, corrections.skin, corrections.proximity);
        let (core_radius, nominal_radius) = match strand.k_r {
            Some(k) => {
                let big_r = k * r;
                (Some(big_r), t_nom.map(|t| big_r + t))
            }
            None => (None, None),
        };
        Ok(ConductorState {
            r,
            area,
            temperature,
            r_dc,
            r_ac,
            gmr: gmr(strand, r),
            core_radius,
            nominal_radius,
            t_nom,
            skin: corrections.skin,
            proximity: corrections.proximity,
        })
    }
}

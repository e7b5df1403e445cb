//! Screening of utility reference data and comparison of recovered values
//! with catalog standards.

use serde::Serialize;

use super::model::{SequenceReference, Variable};
use super::study::{recover, CandidateFilter, FeasibilityResult, StudyOptions};
use crate::catalog::{Catalog, LineKind};
use crate::error::Result;

/// Candidates whose series-only z_diff exceeds this are treated as unable to
/// reproduce the data.
pub const ELIMINATION_ZDIFF: f64 = 0.05;

/// When every candidate stays at or above this z_diff, no combination
/// explains the data.
pub const UNEXPLAINED_ZDIFF: f64 = 0.25;

/// Zero-sequence values derived from positive-sequence ones, as in
/// `R00 = 4 R11` and `X00 = X11`, each within 1%.
pub fn fabricated_zero_sequence(reference: &SequenceReference) -> bool {
    match (reference.r00, reference.x00) {
        (Some(r0), Some(x0)) => {
            let r = 4.0 * reference.r11;
            (r0 - r).abs() <= 0.01 * r && (x0 - reference.x11).abs() <= 0.01 * reference.x11
        }
        _ => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub struct ValidationFlags {
    pub fabricated_zero_sequence: bool,
    pub unexplained: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidatedRecovery {
    pub flags: ValidationFlags,
    pub dropped_zero_sequence: bool,
    /// Ranking with the references as given.
    pub initial: Vec<FeasibilityResult>,
    /// Ranking after screening; equals `initial` when nothing was dropped.
    pub ranked: Vec<FeasibilityResult>,
}

/// Recovers with the references as given, then drops zero-sequence values
/// and recovers again when they look fabricated or nothing explains them.
pub fn validate_and_recover(
    reference: &SequenceReference,
    catalog: &Catalog,
    filter: &CandidateFilter,
    options: &StudyOptions,
) -> Result<ValidatedRecovery> {
    let initial = recover(reference, catalog, filter, options)?;
    let flags = ValidationFlags {
        fabricated_zero_sequence: fabricated_zero_sequence(reference),
        unexplained: initial.iter().all(|r| !(r.z_diff < UNEXPLAINED_ZDIFF)),
    };
    let drop = (flags.fabricated_zero_sequence || flags.unexplained) && reference.r00.is_some();
    let ranked = if drop {
        recover(&reference.without_zero_sequence(), catalog, filter, options)?
    } else {
        initial.clone()
    };
    Ok(ValidatedRecovery {
        flags,
        dropped_zero_sequence: drop,
        initial,
        ranked,
    })
}

/// Relative difference of a recovered value from a catalog standard.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StandardMatch {
    /// Conductor code, or the configuration name for a standard geometry.
    pub code: String,
    pub variable: Variable,
    pub recovered: f64,
    pub standard: f64,
    pub percent: f64,
}

/// Percent mismatch of a recovered point against the catalog: strand radius
/// against every conductor of the same kind, stranding and material (any core
/// count), nearest first, and for overhead lines phase spacing against the
/// standard geometry.
pub fn standard_mismatch(catalog: &Catalog, result: &FeasibilityResult) -> Vec<StandardMatch> {
    let (Ok(config), Ok(material)) = (catalog.config(&result.config), catalog.material(&result.material)) else {
        return Vec::new();
    };
    let pct = |a: f64, s: f64| 100.0 * (a - s).abs() / s;
    let mut out = Vec::new();
    if let Some(&r) = result.recovered.get(&Variable::Radius) {
        let same = catalog.conductors.iter().filter(|e| {
            e.kind == config.kind && e.strands == config.strands && e.material.eq_ignore_ascii_case(&material.name)
        });
        for e in same {
            out.push(StandardMatch {
                code: e.code.clone(),
                variable: Variable::Radius,
                recovered: r,
                standard: e.r_std,
                percent: pct(r, e.r_std),
            });
        }
        out.sort_by(|a, b| a.percent.total_cmp(&b.percent));
    }
    if config.kind == LineKind::Overhead {
        if let (Some(&u1), Some(std_u1)) = (
            result.recovered.get(&Variable::U1),
            catalog.standard_geometry(&config.name).and_then(|g| g.u1),
        ) {
            out.push(StandardMatch {
                code: config.name.clone(),
                variable: Variable::U1,
                recovered: u1,
                standard: std_u1,
                percent: pct(u1, std_u1),
            });
        }
    }
    out
}

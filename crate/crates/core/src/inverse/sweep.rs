use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::model::{SequenceReference, Variable};
use super::study::{feasibility, slack_analysis, with_workers, StudyOptions};
use crate::catalog::{Catalog, Combination, LineKind};
use crate::conductor::radius_from_area;
use crate::error::{Error, Result};
use crate::forward::{forward_pipeline, ForwardOptions, LineSpec};

/// Evenly spaced values from `start` to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn single(v: f64) -> Self {
        Self::new(v, v, 1.0)
    }

    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || self.stop < self.start {
            return Vec::new();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub kind: LineKind,
    pub forward_configs: Vec<String>,
    pub materials: Vec<String>,
    /// Cross-sections [mm^2] for round strands.
    pub area: Grid,
    /// Cross-sections for sector-shaped strands.
    pub sector_area: Grid,
    pub temperature: Grid,
    /// Insulation used for forward cables [mm].
    pub t_nom: f64,
    /// Overrides the standard reference height of forward lines.
    pub v_ref: Option<f64>,
    pub candidates: Vec<Combination>,
    pub betas: Vec<f64>,
    /// Solve the feasibility problem as well as the slack checks.
    pub zdiff: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForwardPoint {
    pub config: String,
    pub material: String,
    pub area: f64,
    pub r: f64,
    pub temperature: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub point: usize,
    pub forward_config: String,
    pub forward_material: String,
    pub forward_n_cond: usize,
    pub area: f64,
    pub r: f64,
    pub temperature: f64,
    pub candidate: String,
    pub candidate_n_cond: usize,
    pub z_diff: Option<f64>,
    /// `(beta, feasible)` per slack level.
    pub feasible: Vec<(f64, bool)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub forward_config: String,
    pub forward_material: String,
    pub candidate: String,
    pub points: usize,
    pub zdiff_min: Option<f64>,
    pub zdiff_mean: Option<f64>,
    pub zdiff_max: Option<f64>,
    /// `(beta, percentage of points feasible)`.
    pub feasible_pct: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub points: Vec<ForwardPoint>,
    /// Grid points removed for violating the radius bounds.
    pub skipped: usize,
    pub records: Vec<SweepRecord>,
    pub summary: Vec<SweepSummary>,
}

fn check_grid(name: &str, g: &Grid, lo: f64, hi: f64) -> Result<()> {
    let v = g.values();
    if v.is_empty() {
        return Err(Error::Contract(format!("{name} grid is empty")));
    }
    if v[0] < lo - 1e-9 || v[v.len() - 1] > hi + 1e-9 {
        return Err(Error::BoundViolation(format!(
            "{name} grid [{}, {}] leaves the catalog range [{lo}, {hi}]",
            v[0],
            v[v.len() - 1]
        )));
    }
    Ok(())
}

/// Forward points of a sweep and the number of grid points skipped.
fn forward_points(catalog: &Catalog, spec: &SweepSpec) -> Result<(Vec<(ForwardPoint, LineSpec)>, usize)> {
    let b = &catalog.bounds;
    check_grid("temperature", &spec.temperature, b.t_min, b.t_max)?;
    let mut out = Vec::new();
    let mut skipped = 0;
    for name in &spec.forward_configs {
        let cfg = catalog.config(name)?;
        if cfg.kind != spec.kind {
            return Err(Error::Contract(format!("{} is not a {} configuration", cfg.name, spec.kind)));
        }
        let sector = cfg.strand.k_r.is_none();
        let (grid, (alo, ahi)) = if sector {
            (&spec.sector_area, b.area_range(true))
        } else {
            (&spec.area, b.area_range(false))
        };
        check_grid("area", grid, alo, ahi)?;
        for mname in &spec.materials {
            let mat = catalog.material(mname)?;
            for area in grid.values() {
                let r = radius_from_area(cfg.strand.n, area)?;
                for t in spec.temperature.values() {
                    if r < b.r_min || r > b.r_max {
                        skipped += 1;
                        continue;
                    }
                    let t_nom = cfg.family.is_cable().then_some(spec.t_nom);
                    let mut line = LineSpec::in_standard_geometry(catalog, cfg, mat, r, t, t_nom)?;
                    if let Some(v) = spec.v_ref {
                        line.geometry.v_ref = v;
                    }
                    out.push((
                        ForwardPoint {
                            config: cfg.name.clone(),
                            material: mat.name.clone(),
                            area,
                            r,
                            temperature: t,
                        },
                        line,
                    ));
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Contract("sweep grid has no points within the radius bounds".into()));
    }
    Ok((out, skipped))
}

/// Feasibility and slack checks of every candidate against series-only
/// references generated over a grid of forward lines.
pub fn mismatch_sweep(catalog: &Catalog, spec: &SweepSpec, options: &StudyOptions) -> Result<SweepReport> {
    if spec.candidates.is_empty() {
        return Err(Error::Contract("sweep has no candidates".into()));
    }
    if spec.betas.iter().any(|b| !(*b >= 0.0)) {
        return Err(Error::Domain("slack levels must be nonnegative".into()));
    }
    let (points, skipped) = forward_points(catalog, spec)?;
    let refs: Vec<SequenceReference> = points
        .iter()
        .map(|(_, line)| {
            forward_pipeline(&catalog.constants, line, &ForwardOptions::series_only())
                .map(|s| SequenceReference::from_components(spec.kind, &s).series_only())
        })
        .collect::<Result<_>>()?;

    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.candidates.len()).map(move |c| (p, c)))
        .collect();
    let inner = StudyOptions {
        workers: None,
        ..options.clone()
    };
    let records: Vec<Result<SweepRecord>> = with_workers(options.workers, || {
        tasks
            .par_iter()
            .map(|&(p, c)| {
                let cand = &spec.candidates[c];
                let reference = &refs[p];
                let z = if spec.zdiff {
                    Some(feasibility(catalog, cand, reference, &inner)?.z_diff)
                } else {
                    None
                };
                let mut feasible = Vec::new();
                for &beta in &spec.betas {
                    let s = slack_analysis(catalog, cand, reference, beta, &[], &inner)?;
                    feasible.push((beta, s.feasible));
                }
                let (fp, line) = &points[p];
                Ok(SweepRecord {
                    point: p,
                    forward_config: fp.config.clone(),
                    forward_material: fp.material.clone(),
                    forward_n_cond: line.config.n_cond,
                    area: fp.area,
                    r: fp.r,
                    temperature: fp.temperature,
                    candidate: cand.label(),
                    candidate_n_cond: cand.config.n_cond,
                    z_diff: z,
                    feasible,
                })
            })
            .collect()
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;

    let mut groups: BTreeMap<(String, String, String), Vec<&SweepRecord>> = BTreeMap::new();
    for r in &records {
        groups
            .entry((r.forward_config.clone(), r.forward_material.clone(), r.candidate.clone()))
            .or_default()
            .push(r);
    }
    let summary = groups
        .into_iter()
        .map(|((f, m, c), rs)| {
            let zs: Vec<f64> = rs.iter().filter_map(|r| r.z_diff).filter(|z| z.is_finite()).collect();
            let n = rs.len();
            let feasible_pct = spec
                .betas
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let k = rs.iter().filter(|r| r.feasible[i].1).count();
                    (*b, 100.0 * k as f64 / n as f64)
                })
                .collect();
            SweepSummary {
                forward_config: f,
                forward_material: m,
                candidate: c,
                points: n,
                zdiff_min: zs.iter().copied().reduce(f64::min),
                zdiff_mean: (!zs.is_empty()).then(|| zs.iter().sum::<f64>() / zs.len() as f64),
                zdiff_max: zs.iter().copied().reduce(f64::max),
                feasible_pct,
            }
        })
        .collect();

    Ok(SweepReport {
        points: points.into_iter().map(|(p, _)| p).collect(),
        skipped,
        records,
        summary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MismatchCell {
    pub feasible: bool,
    /// Strand-radius range compatible with the slack band.
    pub r_range: Option<(f64, f64)>,
    /// The inverse conductor's standard radius lies in the range.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MismatchMatrix {
    pub codes: Vec<String>,
    pub temperature: f64,
    pub beta: f64,
    /// `cells[forward][inverse]`.
    pub cells: Vec<Vec<MismatchCell>>,
}

impl MismatchMatrix {
    /// Rows as strings of `X` (flagged) and `-`.
    pub fn pattern(&self) -> Vec<String> {
        self.cells
            .iter()
            .map(|row| row.iter().map(|c| if c.flagged { 'X' } else { '-' }).collect())
            .collect()
    }
}

/// Mismatch study among standard cables with `n_cond` cores: each cable in
/// its standard build gives the references, and each inverse column asks
/// whether its standard radius stays inside the radius range allowed by the
/// slack band.
pub fn standard_mismatch_matrix(
    catalog: &Catalog,
    codes: &[&str],
    n_cond: usize,
    temperature: f64,
    beta: f64,
    options: &StudyOptions,
) -> Result<MismatchMatrix> {
    let mut combos = Vec::new();
    let mut refs = Vec::new();
    for code in codes {
        let e = catalog.conductor(code)?;
        if e.kind != LineKind::Cable {
            return Err(Error::Contract(format!("{code} is not a cable")));
        }
        let cfg = catalog.cable_config_for(e, n_cond)?;
        let mat = catalog.material(&e.material)?;
        combos.push(Combination {
            config: cfg.clone(),
            material: mat.clone(),
        });
        let line = LineSpec::catalog_standard(catalog, &cfg.name, code, temperature)?;
        let s = forward_pipeline(&catalog.constants, &line, &ForwardOptions::series_only())?;
        refs.push(SequenceReference::from_components(LineKind::Cable, &s).series_only());
    }
    // Columns sharing a combination share one slack analysis.
    let mut keys: Vec<(usize, String)> = Vec::new();
    for f in 0..codes.len() {
        for c in &combos {
            let k = (f, c.label());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
    }
    let inner = StudyOptions {
        workers: None,
        ..options.clone()
    };
    let solved: Vec<Result<(bool, Option<(f64, f64)>)>> = with_workers(options.workers, || {
        keys.par_iter()
            .map(|(f, label)| {
                let combo = combos.iter().find(|c| &c.label() == label).expect("known combination");
                let s = slack_analysis(catalog, combo, &refs[*f], beta, &[Variable::Radius], &inner)?;
                Ok((s.feasible, s.ranges.get(&Variable::Radius).copied()))
            })
            .collect()
    });
    let mut table = BTreeMap::new();
    for (k, s) in keys.into_iter().zip(solved) {
        table.insert(k, s?);
    }
    let mut cells = Vec::new();
    for f in 0..codes.len() {
        let mut row = Vec::new();
        for (i, code) in codes.iter().enumerate() {
            let (feasible, range) = table[&(f, combos[i].label())];
            let r_std = catalog.conductor(code)?.r_std;
            let flagged = feasible && range.map_or(false, |(a, b)| r_std >= a - 1e-6 && r_std <= b + 1e-6);
            row.push(MismatchCell {
                feasible,
                r_range: range,
                flagged,
            });
        }
        cells.push(row);
    }
    Ok(MismatchMatrix {
        codes: codes.iter().map(|c| c.to_string()).collect(),
        temperature,
        beta,
        cells,
    })
}

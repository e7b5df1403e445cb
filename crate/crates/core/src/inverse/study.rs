use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::model::{build_model, InverseModel, Mode, ModelOptions, Objective, Point, SequenceReference, Variable};
use super::solve::{solve_from, SolveStatus, SolverOptions, FEASIBILITY_TOL};
use crate::catalog::{candidate_combinations, Catalog, Combination, LineKind};
use crate::error::{Error, Result};
use crate::forward::{forward_pipeline, ForwardOptions, SequenceComponents};

#[derive(Clone, Debug, PartialEq, Default)]
pub struct StudyOptions {
    pub solver: SolverOptions,
    pub model: ModelOptions,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

/// Runs `f` on a pool limited to `workers` threads.
pub(crate) fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

/// Mean normalised absolute deviation over the components present in the
/// reference.
pub fn zdiff(fitted: &SequenceComponents, reference: &SequenceReference) -> Result<f64> {
    reference.validate()?;
    let comps = reference.components();
    let mut acc = 0.0;
    for (c, r) in &comps {
        let a = c.of(fitted).ok_or_else(|| {
            Error::Contract(format!("fitted components lack {} present in the reference", c.name()))
        })?;
        acc += ((a - r) / r).abs();
    }
    Ok(acc / comps.len() as f64)
}

/// Known line information that narrows the candidate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub struct CandidateFilter {
    pub n_cond: Option<usize>,
    /// `Some(false)` rules out copper cables.
    pub buried: Option<bool>,
}

/// Combinations to try for a reference. Sector cables are left out when
/// shunt references are given, as their shunt chain is undefined.
pub fn candidates(reference: &SequenceReference, catalog: &Catalog, filter: &CandidateFilter) -> Vec<Combination> {
    candidate_combinations(reference.kind, catalog)
        .into_iter()
        .filter(|c| filter.n_cond.map_or(true, |n| c.config.n_cond == n))
        .filter(|c| !(filter.buried == Some(false) && c.config.kind == LineKind::Cable && c.material.name.eq_ignore_ascii_case("Cu")))
        .filter(|c| !(reference.has_shunt() && c.config.strand.k_r.is_none()))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityResult {
    pub combination: String,
    pub config: String,
    pub material: String,
    pub n_cond: usize,
    pub z_diff: f64,
    /// Forward components at the recovered point.
    pub fitted: Option<SequenceComponents>,
    pub recovered: Point,
    pub status: SolveStatus,
    pub starts: usize,
    pub converged: usize,
    pub dof: usize,
}

pub(crate) fn forward_at(model: &InverseModel, point: &Point) -> Result<SequenceComponents> {
    let spec = model.line_spec(point)?;
    let opts = ForwardOptions {
        include_shunt: model.with_shunt,
        corrections: model.corrections,
        frequency: Some(model.frequency),
    };
    forward_pipeline(&model.constants, &spec, &opts)
}

/// Solves the feasibility problem of one combination.
pub fn feasibility(
    catalog: &Catalog,
    combination: &Combination,
    reference: &SequenceReference,
    options: &StudyOptions,
) -> Result<FeasibilityResult> {
    let model = build_model(catalog, combination, reference, Mode::Feasibility, Objective::ZDiff, &options.model)?;
    let sol = solve_from(&model, &options.solver, &[]);
    let fitted = if sol.status == SolveStatus::Infeasible {
        None
    } else {
        forward_at(&model, &sol.point).ok()
    };
    let z = match &fitted {
        Some(f) => zdiff(f, reference)?,
        None => f64::INFINITY,
    };
    Ok(FeasibilityResult {
        combination: combination.label(),
        config: combination.config.name.clone(),
        material: combination.material.name.clone(),
        n_cond: combination.config.n_cond,
        z_diff: z,
        fitted,
        recovered: sol.point,
        status: sol.status,
        starts: sol.starts,
        converged: sol.converged,
        dof: model.degrees_of_freedom(),
    })
}

fn rank_key(r: &FeasibilityResult) -> (u8, i64, usize, String) {
    let z = if r.z_diff.is_finite() { (r.z_diff * 1e9).round() as i64 } else { i64::MAX };
    (u8::from(!r.status.usable()), z, r.n_cond, r.config.clone())
}

/// Feasibility over every candidate, best first.
pub fn recover(
    reference: &SequenceReference,
    catalog: &Catalog,
    filter: &CandidateFilter,
    options: &StudyOptions,
) -> Result<Vec<FeasibilityResult>> {
    reference.validate()?;
    let cands = candidates(reference, catalog, filter);
    if cands.is_empty() {
        return Err(Error::Contract(format!("no {} candidates match the given line information", reference.kind)));
    }
    let results: Vec<Result<FeasibilityResult>> = with_workers(options.workers, || {
        cands
            .par_iter()
            .map(|c| feasibility(catalog, c, reference, options))
            .collect()
    });
    let mut out = results.into_iter().collect::<Result<Vec<_>>>()?;
    out.sort_by_cached_key(rank_key);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundEntry {
    pub variable: Variable,
    pub min: f64,
    pub max: f64,
    pub gap: f64,
    /// Held at a known value rather than optimised.
    pub fixed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub combination: String,
    pub entries: Vec<BoundEntry>,
}

impl BoundReport {
    pub fn get(&self, v: Variable) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.variable == v)
    }
}

/// Value of a reported variable at a point; cable core spacing is derived.
pub(crate) fn value_of(model: &InverseModel, point: &Point, v: Variable) -> Option<f64> {
    match point.get(&v) {
        Some(x) => Some(*x),
        None if v == Variable::U1 => model.lift(point).ok().map(|l| l.u1),
        None => None,
    }
}

fn max_violation(model: &InverseModel, point: &Point) -> f64 {
    let aux = vec![0.0; model.num_aux()];
    match model.operational_values(point, &aux) {
        Ok(rows) => carson_nlp::constraint_violation(
            &rows.iter().map(|r| r.2).collect::<Vec<_>>(),
            &rows.iter().map(|r| r.1).collect::<Vec<_>>(),
        ),
        Err(_) => f64::INFINITY,
    }
}

/// Extreme values of `v` over the runs satisfying the model rows, together
/// with the points attaining them.
fn extremes(
    catalog: &Catalog,
    combination: &Combination,
    reference: &SequenceReference,
    mode: Mode,
    v: Variable,
    options: &StudyOptions,
    warm: &[Point],
    solver: &SolverOptions,
) -> Result<Option<((f64, Point), (f64, Point))>> {
    let mut lo: Option<(f64, Point)> = None;
    let mut hi: Option<(f64, Point)> = None;
    let mut consider = |x: f64, p: &Point| {
        if lo.as_ref().map_or(true, |(a, _)| x < *a) {
            lo = Some((x, p.clone()));
        }
        if hi.as_ref().map_or(true, |(a, _)| x > *a) {
            hi = Some((x, p.clone()));
        }
    };
    for objective in [Objective::Minimize(v), Objective::Maximize(v)] {
        let model = build_model(catalog, combination, reference, mode, objective, &options.model)?;
        let sol = solve_from(&model, solver, warm);
        for run in &sol.runs {
            if run.violation <= FEASIBILITY_TOL * 1e-2 {
                if let Some(x) = value_of(&model, &run.point, v) {
                    consider(x, &run.point);
                }
            }
        }
        for p in warm {
            if max_violation(&model, p) <= FEASIBILITY_TOL * 1e-2 {
                if let Some(x) = value_of(&model, p, v) {
                    consider(x, p);
                }
            }
        }
    }
    Ok(lo.zip(hi))
}

/// Minimises and maximises each variable with the diagonal sequence values
/// fixed to `starred`.
pub fn tighten_bounds(
    catalog: &Catalog,
    combination: &Combination,
    starred: &SequenceReference,
    options: &StudyOptions,
    warm: &[Point],
) -> Result<BoundReport> {
    let probe = build_model(
        catalog,
        combination,
        starred,
        Mode::FixedSequence,
        Objective::Minimize(Variable::Radius),
        &options.model,
    )?;
    if let Some(msg) = &probe.infeasible_bounds {
        return Err(Error::InconsistentStarredValues(format!("{}: {msg}", combination.label())));
    }
    let phi = probe.phi();
    let tasks: Vec<Variable> = phi.iter().copied().filter(|v| !probe.is_fixed(*v)).collect();
    let found: Vec<Result<Option<((f64, Point), (f64, Point))>>> = with_workers(options.workers, || {
        tasks
            .par_iter()
            .map(|v| extremes(catalog, combination, starred, Mode::FixedSequence, *v, options, warm, &options.solver))
            .collect()
    });
    let mut by_var = BTreeMap::new();
    for (v, f) in tasks.iter().zip(found) {
        match f? {
            Some(((a, _), (b, _))) => {
                by_var.insert(*v, (a, b));
            }
            None => {
                return Err(Error::InconsistentStarredValues(format!(
                    "{}: no point reproduces the fixed sequence values while optimising {}",
                    combination.label(),
                    v.name()
                )))
            }
        }
    }
    let entries = phi
        .iter()
        .map(|v| match probe.fixed.iter().find(|(w, _)| w == v) {
            Some((_, x)) => BoundEntry {
                variable: *v,
                min: *x,
                max: *x,
                gap: 0.0,
                fixed: true,
            },
            None => {
                let (a, b) = by_var[v];
                BoundEntry {
                    variable: *v,
                    min: a,
                    max: b,
                    gap: b - a,
                    fixed: false,
                }
            }
        })
        .collect();
    Ok(BoundReport {
        combination: combination.label(),
        entries,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SlackResult {
    pub combination: String,
    pub beta: f64,
    pub feasible: bool,
    /// Smallest total band violation found.
    pub excess: f64,
    /// Present only when feasible.
    pub ranges: BTreeMap<Variable, (f64, f64)>,
    /// Points inside the band, usable as warm starts at larger slack.
    #[serde(skip)]
    pub witnesses: Vec<Point>,
}

pub fn slack_analysis(
    catalog: &Catalog,
    combination: &Combination,
    reference: &SequenceReference,
    beta: f64,
    variables: &[Variable],
    options: &StudyOptions,
) -> Result<SlackResult> {
    slack_analysis_from(catalog, combination, reference, beta, variables, options, &[])
}

/// Slack analysis with extra warm-start points.
pub fn slack_analysis_from(
    catalog: &Catalog,
    combination: &Combination,
    reference: &SequenceReference,
    beta: f64,
    variables: &[Variable],
    options: &StudyOptions,
    warm: &[Point],
) -> Result<SlackResult> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("slack must be nonnegative, got {beta}")));
    }
    let mode = Mode::Slack(beta);
    let phase1 = build_model(catalog, combination, reference, mode, Objective::BandExcess, &options.model)?;
    let sol = solve_from(&phase1, &options.solver, warm);
    let mut witnesses: Vec<Point> = Vec::new();
    let mut excess = f64::INFINITY;
    for run in &sol.runs {
        if run.violation.is_finite() {
            excess = excess.min(run.objective.max(0.0) + run.violation);
        }
        if run.objective <= FEASIBILITY_TOL && run.violation <= FEASIBILITY_TOL {
            witnesses.push(run.point.clone());
        }
    }
    let feasible = !witnesses.is_empty();
    let mut ranges = BTreeMap::new();
    if feasible {
        let mut starts: Vec<Point> = warm.to_vec();
        starts.extend(witnesses.iter().cloned());
        let refine = SolverOptions {
            starts: 0,
            ..options.solver.clone()
        };
        let found: Vec<Result<Option<((f64, Point), (f64, Point))>>> = with_workers(options.workers, || {
            variables
                .par_iter()
                .map(|v| extremes(catalog, combination, reference, mode, *v, options, &starts, &refine))
                .collect()
        });
        for (v, f) in variables.iter().zip(found) {
            if let Some(((a, pa), (b, pb))) = f? {
                ranges.insert(*v, (a, b));
                witnesses.push(pa);
                witnesses.push(pb);
            }
        }
    }
    Ok(SlackResult {
        combination: combination.label(),
        beta,
        feasible,
        excess,
        ranges,
        witnesses,
    })
}

/// Slack analyses over increasing `betas`, each warm-started from the
/// points found at the previous level.
pub fn slack_profile(
    catalog: &Catalog,
    combination: &Combination,
    reference: &SequenceReference,
    betas: &[f64],
    variables: &[Variable],
    options: &StudyOptions,
) -> Result<Vec<SlackResult>> {
    let mut order: Vec<usize> = (0..betas.len()).collect();
    order.sort_by(|a, b| betas[*a].total_cmp(&betas[*b]));
    let mut warm: Vec<Point> = Vec::new();
    let mut out: Vec<Option<SlackResult>> = vec![None; betas.len()];
    for i in order {
        let r = slack_analysis_from(catalog, combination, reference, betas[i], variables, options, &warm)?;
        warm.extend(r.witnesses.iter().cloned());
        out[i] = Some(r);
    }
    Ok(out.into_iter().map(|r| r.expect("every level solved")).collect())
}

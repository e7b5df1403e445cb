//! The subcommands, each filling a report.

use anyhow::{anyhow, bail, Context as _, Result};
use carson_core::catalog::{candidate_combinations, Catalog, Combination, LineKind};
use carson_core::conductor::{core_radii, radius_from_area};
use carson_core::forward::{forward_detailed, ComplexMatrix, ForwardOptions, LineSpec, SequenceComponents};
use carson_core::geometry::GeometryVars;
use carson_core::inverse::{
    build_model, candidates, feasibility, mismatch_sweep, slack_profile, standard_mismatch, tighten_bounds,
    validate_and_recover, FeasibilityResult, Mode, Objective, SequenceReference, StudyOptions, SweepSpec,
    Variable,
};
use carson_core::Error;

use crate::args::{ForwardArgs, RecoverArgs, ReferenceArgs, SlackArgs, StudyArgs, SweepArgs};
use crate::input::{read_lines, read_references, LineRecord, ReferenceRecord};
use crate::report::{num, opt, text, Cell, Report, Row};

pub struct Context {
    pub catalog: Catalog,
    pub study: StudyOptions,
}

impl Context {
    /// Study options with a record's known temperature applied.
    fn options_for(&self, rec: &ReferenceRecord) -> StudyOptions {
        let mut o = self.study.clone();
        o.model.temperature = rec.temperature;
        o
    }
}

fn serde_name<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn sequence_cells(s: Option<&SequenceComponents>) -> Row {
    vec![
        ("r00", opt(s.map(|s| s.r00))),
        ("x00", opt(s.map(|s| s.x00))),
        ("r11", opt(s.map(|s| s.r11))),
        ("x11", opt(s.map(|s| s.x11))),
        ("b00", opt(s.and_then(|s| s.b00))),
        ("b11", opt(s.and_then(|s| s.b11))),
    ]
}

// ---------------------------------------------------------------- forward

fn line_spec(cat: &Catalog, rec: &LineRecord) -> Result<LineSpec> {
    let config = cat.config(&rec.config)?;
    let (material, r, std_t_nom) = match &rec.conductor {
        Some(code) => {
            let e = cat.conductor(code)?;
            if e.strands != config.strands {
                bail!("{code} has N={} strands but {} expects N={}", e.strands, config.name, config.strands);
            }
            (cat.material(&e.material)?, e.r_std, e.t_nom_std)
        }
        None => {
            let name = rec.material.as_deref().ok_or_else(|| anyhow!("give a conductor code or a material"))?;
            let r = match (rec.area, rec.radius) {
                (Some(a), None) => radius_from_area(config.strand.n, a)?,
                (None, Some(r)) => r,
                _ => bail!("give exactly one of area and radius"),
            };
            (cat.material(name)?, r, None)
        }
    };
    let b = &cat.bounds;
    if !(b.r_min..=b.r_max).contains(&r) {
        return Err(Error::BoundViolation(format!(
            "strand radius {r:.4} mm is outside [{}, {}] mm",
            b.r_min, b.r_max
        ))
        .into());
    }
    if !(b.t_min..=b.t_max).contains(&rec.temp) {
        return Err(Error::BoundViolation(format!(
            "temperature {} degC is outside [{}, {}] degC",
            rec.temp, b.t_min, b.t_max
        ))
        .into());
    }
    let t_nom = if config.family.is_cable() {
        Some(rec.tnom.or(std_t_nom).ok_or_else(|| anyhow!("cable lines need --tnom"))?)
    } else {
        None
    };
    let mut spec = if cat.standard_geometry(&config.name).is_some() {
        LineSpec::in_standard_geometry(cat, config, material, r, rec.temp, t_nom)?
    } else {
        let v_ref = rec.v_ref.ok_or_else(|| anyhow!("{} has no standard geometry; give v_ref", config.name))?;
        LineSpec {
            config: config.clone(),
            material: material.clone(),
            r,
            temperature: rec.temp,
            t_nom,
            geometry: GeometryVars {
                u1: None,
                u2: None,
                v1: None,
                v_ref,
            },
        }
    };
    let g = &mut spec.geometry;
    g.u1 = rec.u1.or(g.u1);
    g.u2 = rec.u2.or(g.u2);
    g.v1 = rec.v1.or(g.v1);
    g.v_ref = rec.v_ref.unwrap_or(g.v_ref);
    Ok(spec)
}

fn matrix_rows(report: &mut Report, line_id: &str, name: &str, m: &ComplexMatrix) {
    let unit = serde_name(&m.unit);
    for i in 0..m.n() {
        for j in 0..m.n() {
            let z = m.data[(i, j)];
            report.push(
                "matrices",
                vec![
                    ("line_id", text(line_id)),
                    ("matrix", text(name)),
                    ("unit", text(unit.as_str())),
                    ("row", Cell::Int(i as i64)),
                    ("col", Cell::Int(j as i64)),
                    ("re", num(z.re)),
                    ("im", num(z.im)),
                ],
            );
        }
    }
}

fn forward_one(ctx: &Context, rec: &LineRecord, args: &ForwardArgs, report: &mut Report) -> Result<()> {
    let spec = line_spec(&ctx.catalog, rec)?;
    // sector cables have no shunt chain
    let shunt = !args.no_shunt && spec.config.strand.k_r.is_some();
    let opts = ForwardOptions {
        include_shunt: shunt,
        ..ForwardOptions::default()
    };
    let rep = forward_detailed(&ctx.catalog.constants, &spec, &opts)?;
    let mut row: Row = vec![
        ("line_id", text(rec.line_id.as_str())),
        ("config", text(spec.config.name.as_str())),
        ("material", text(spec.material.name.as_str())),
        ("r", num(rep.conductor.r)),
        ("area", num(rep.conductor.area)),
        ("temperature", num(rep.conductor.temperature)),
        ("t_nom", opt(rep.conductor.t_nom)),
        ("r_ac", num(rep.conductor.r_ac)),
        ("gmr", num(rep.conductor.gmr)),
        ("u1", opt(rep.geometry.u1)),
        ("u2", opt(rep.geometry.u2)),
        ("v1", opt(rep.geometry.v1)),
        ("v_ref", num(rep.geometry.v_ref)),
    ];
    row.extend(sequence_cells(rep.sequence.as_ref()));
    report.push("sequence", row);
    if args.emit_matrices {
        let im = &rep.impedances;
        let chain = [
            ("z_car", Some(&im.z_car)),
            ("z_kr", im.z_kr.as_ref()),
            ("z012", im.z012.as_ref()),
            ("p", im.p.as_ref()),
            ("c", im.c.as_ref()),
            ("y", im.y.as_ref()),
            ("y012", im.y012.as_ref()),
        ];
        for (name, m) in chain {
            if let Some(m) = m {
                matrix_rows(report, &rec.line_id, name, m);
            }
        }
    }
    Ok(())
}

pub fn forward(ctx: &Context, args: &ForwardArgs, seed: u64) -> Result<Report> {
    let mut tables = vec!["sequence"];
    if args.emit_matrices {
        tables.push("matrices");
    }
    let mut report = Report::new("forward", seed, &tables);
    match &args.input {
        Some(path) => {
            for parsed in read_lines(path)? {
                match parsed {
                    Ok(rec) => {
                        if let Err(e) = forward_one(ctx, &rec, args, &mut report) {
                            report.record_error(&rec.line_id, &format!("{e:#}"));
                        }
                    }
                    Err((id, e)) => report.record_error(&id, &format!("{e:#}")),
                }
            }
        }
        None => {
            let rec = LineRecord {
                line_id: args.line_id.clone(),
                config: args.config.clone().unwrap_or_default(),
                conductor: args.conductor.clone(),
                material: args.material.clone(),
                area: args.area,
                radius: args.radius,
                temp: args.temp.unwrap_or_default(),
                tnom: args.tnom,
                u1: args.u1,
                u2: args.u2,
                v1: args.v1,
                v_ref: args.v_ref,
            };
            forward_one(ctx, &rec, args, &mut report).with_context(|| format!("line {}", rec.line_id))?;
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------- recover

/// Recovered value of `v`; the core spacing of round-strand cables is
/// implied by radius and insulation.
fn recovered_value(cat: &Catalog, res: &FeasibilityResult, v: Variable) -> Option<f64> {
    if let Some(x) = res.recovered.get(&v) {
        return Some(*x);
    }
    if v != Variable::U1 {
        return None;
    }
    let cfg = cat.config(&res.config).ok()?;
    let (r, t) = (res.recovered.get(&Variable::Radius)?, res.recovered.get(&Variable::TNom)?);
    core_radii(&cfg.strand, *r, *t).ok().map(|c| c.1)
}

fn point_cells(get: impl Fn(Variable) -> Option<f64>) -> Row {
    Variable::ALL.iter().map(|v| (v.name(), opt(get(*v)))).collect()
}

fn ranking_row(cat: &Catalog, line_id: &str, rank: usize, res: &FeasibilityResult) -> Row {
    let mut row: Row = vec![
        ("line_id", text(line_id)),
        ("rank", Cell::Int(rank as i64)),
        ("combination", text(res.combination.as_str())),
        ("config", text(res.config.as_str())),
        ("material", text(res.material.as_str())),
        ("n_cond", Cell::Int(res.n_cond as i64)),
        ("z_diff", num(res.z_diff)),
        ("status", text(serde_name(&res.status))),
        ("converged", Cell::Int(res.converged as i64)),
        ("starts", Cell::Int(res.starts as i64)),
    ];
    row.extend(point_cells(|v| recovered_value(cat, res, v)));
    let matches = standard_mismatch(cat, res);
    let nearest_r = matches.iter().find(|m| m.variable == Variable::Radius);
    let u1 = matches.iter().find(|m| m.variable == Variable::U1);
    row.extend([
        ("r_nearest", nearest_r.map_or(Cell::Null, |m| text(m.code.as_str()))),
        ("r_std", opt(nearest_r.map(|m| m.standard))),
        ("r_mismatch_pct", opt(nearest_r.map(|m| m.percent))),
        ("u1_std", opt(u1.map(|m| m.standard))),
        ("u1_mismatch_pct", opt(u1.map(|m| m.percent))),
    ]);
    let fitted: Row = sequence_cells(res.fitted.as_ref())
        .into_iter()
        .map(|(k, c)| (fitted_name(k), c))
        .collect();
    row.extend(fitted);
    row
}

fn fitted_name(k: &str) -> &'static str {
    match k {
        "r00" => "fit_r00",
        "x00" => "fit_x00",
        "r11" => "fit_r11",
        "x11" => "fit_x11",
        "b00" => "fit_b00",
        _ => "fit_b11",
    }
}

fn flags_row(rec: &ReferenceRecord, v: &carson_core::inverse::ValidatedRecovery) -> Row {
    let best = v.ranked.first();
    vec![
        ("line_id", text(rec.line_id.as_str())),
        ("kind", text(rec.reference.kind.to_string())),
        ("candidates", Cell::Int(v.ranked.len() as i64)),
        ("fabricated_zero_sequence", Cell::Bool(v.flags.fabricated_zero_sequence)),
        ("unexplained", Cell::Bool(v.flags.unexplained)),
        ("dropped_zero_sequence", Cell::Bool(v.dropped_zero_sequence)),
        ("initial_best_z_diff", opt(v.initial.first().map(|r| r.z_diff))),
        ("best", best.map_or(Cell::Null, |r| text(r.combination.as_str()))),
        ("best_z_diff", opt(best.map(|r| r.z_diff))),
    ]
}

fn each_reference(
    args: &ReferenceArgs,
    report: &mut Report,
    mut f: impl FnMut(&ReferenceRecord, &mut Report) -> Result<()>,
) -> Result<()> {
    for parsed in read_references(&args.input, args.no_shunt)? {
        match parsed {
            Ok(rec) => {
                if let Err(e) = f(&rec, report) {
                    report.record_error(&rec.line_id, &format!("{e:#}"));
                }
            }
            Err((id, e)) => report.record_error(&id, &format!("{e:#}")),
        }
    }
    Ok(())
}

pub fn recover(ctx: &Context, args: &RecoverArgs, seed: u64) -> Result<Report> {
    let mut report = Report::new("recover", seed, &["flags", "ranking"]);
    each_reference(&args.reference, &mut report, |rec, report| {
        let v = validate_and_recover(&rec.reference, &ctx.catalog, &rec.filter, &ctx.options_for(rec))?;
        report.push("flags", flags_row(rec, &v));
        let top = args.top.unwrap_or(usize::MAX);
        for (i, res) in v.ranked.iter().take(top).enumerate() {
            report.push("ranking", ranking_row(&ctx.catalog, &rec.line_id, i + 1, res));
        }
        Ok(())
    })?;
    Ok(report)
}

pub fn validate(ctx: &Context, args: &ReferenceArgs, seed: u64) -> Result<Report> {
    let mut report = Report::new("validate", seed, &["flags"]);
    each_reference(args, &mut report, |rec, report| {
        let v = validate_and_recover(&rec.reference, &ctx.catalog, &rec.filter, &ctx.options_for(rec))?;
        report.push("flags", flags_row(rec, &v));
        Ok(())
    })?;
    Ok(report)
}

// ---------------------------------------------------------- bounds, slack

fn study_candidates(ctx: &Context, args: &StudyArgs, rec: &ReferenceRecord) -> Result<Vec<Combination>> {
    let keep = |list: &[String], name: &str| list.is_empty() || list.iter().any(|x| x.eq_ignore_ascii_case(name));
    let out: Vec<Combination> = candidates(&rec.reference, &ctx.catalog, &rec.filter)
        .into_iter()
        .filter(|c| keep(&args.config, &c.config.name) && keep(&args.material, &c.material.name))
        .collect();
    if out.is_empty() {
        bail!("no candidate combination matches the record and the --config/--material filters");
    }
    Ok(out)
}

/// The fitted components restricted to those present in the reference.
fn starred_from_fit(reference: &SequenceReference, fitted: &SequenceComponents) -> SequenceReference {
    let mut s = SequenceReference::from_components(reference.kind, fitted);
    if !reference.has_shunt() {
        s = s.series_only();
    }
    if reference.r00.is_none() {
        s = s.without_zero_sequence();
    }
    s
}

pub fn bounds(ctx: &Context, args: &StudyArgs, seed: u64) -> Result<Report> {
    let mut report = Report::new("bounds", seed, &["bounds"]);
    each_reference(&args.reference, &mut report, |rec, report| {
        let opts = ctx.options_for(rec);
        for combo in study_candidates(ctx, args, rec)? {
            let label = combo.label();
            let fit = feasibility(&ctx.catalog, &combo, &rec.reference, &opts)?;
            let warm = [fit.recovered.clone()];
            let (starred, source) = match tighten_bounds(&ctx.catalog, &combo, &rec.reference, &opts, &warm) {
                Ok(b) => (Ok(b), "reference"),
                // the references are not reproducible exactly; fall back to the closest fit
                Err(Error::InconsistentStarredValues(_)) if fit.fitted.is_some() => {
                    let s = starred_from_fit(&rec.reference, fit.fitted.as_ref().unwrap());
                    (tighten_bounds(&ctx.catalog, &combo, &s, &opts, &warm), "fitted")
                }
                Err(e) => (Err(e), "reference"),
            };
            let b = match starred {
                Ok(b) => b,
                Err(e) => {
                    report.record_error(&rec.line_id, &format!("{label}: {e}"));
                    continue;
                }
            };
            for e in &b.entries {
                report.push(
                    "bounds",
                    vec![
                        ("line_id", text(rec.line_id.as_str())),
                        ("combination", text(label.as_str())),
                        ("z_diff", num(fit.z_diff)),
                        ("starred", text(source)),
                        ("variable", text(e.variable.name())),
                        ("min", num(e.min)),
                        ("max", num(e.max)),
                        ("gap", num(e.gap)),
                        ("fixed", Cell::Bool(e.fixed)),
                    ],
                );
            }
        }
        Ok(())
    })?;
    Ok(report)
}

fn slack_variables(ctx: &Context, combo: &Combination, rec: &ReferenceRecord, requested: &[Variable]) -> Result<Vec<Variable>> {
    let opts = ctx.options_for(rec);
    let probe = build_model(&ctx.catalog, combo, &rec.reference, Mode::Slack(0.0), Objective::BandExcess, &opts.model)?;
    let free: Vec<Variable> = probe.phi().into_iter().filter(|v| !probe.is_fixed(*v)).collect();
    if requested.is_empty() {
        return Ok(free);
    }
    Ok(requested.iter().copied().filter(|v| free.contains(v)).collect())
}

pub fn slack(ctx: &Context, args: &SlackArgs, seed: u64) -> Result<Report> {
    if args.beta.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
        bail!("slack levels must be nonnegative");
    }
    let requested: Vec<Variable> = args.vars.iter().map(|s| s.parse()).collect::<Result<_, Error>>()?;
    let mut report = Report::new("slack", seed, &["slack", "ranges"]);
    each_reference(&args.study.reference, &mut report, |rec, report| {
        let opts = ctx.options_for(rec);
        for combo in study_candidates(ctx, &args.study, rec)? {
            let vars = slack_variables(ctx, &combo, rec, &requested)?;
            let label = combo.label();
            let profile = slack_profile(&ctx.catalog, &combo, &rec.reference, &args.beta, &vars, &opts)?;
            for p in &profile {
                report.push(
                    "slack",
                    vec![
                        ("line_id", text(rec.line_id.as_str())),
                        ("combination", text(label.as_str())),
                        ("beta", num(p.beta)),
                        ("feasible", Cell::Bool(p.feasible)),
                        ("excess", num(p.excess)),
                    ],
                );
                for (v, (lo, hi)) in &p.ranges {
                    report.push(
                        "ranges",
                        vec![
                            ("line_id", text(rec.line_id.as_str())),
                            ("combination", text(label.as_str())),
                            ("beta", num(p.beta)),
                            ("variable", text(v.name())),
                            ("min", num(*lo)),
                            ("max", num(*hi)),
                        ],
                    );
                }
            }
        }
        Ok(())
    })?;
    Ok(report)
}

// ------------------------------------------------------------------ sweep

pub fn sweep(ctx: &Context, args: &SweepArgs, seed: u64) -> Result<Report> {
    let kind: LineKind = args.kind.parse()?;
    let keep = |list: &[String], name: &str| list.is_empty() || list.iter().any(|x| x.eq_ignore_ascii_case(name));
    let combos: Vec<Combination> = candidate_combinations(kind, &ctx.catalog)
        .into_iter()
        .filter(|c| keep(&args.candidates, &c.config.name) && keep(&args.candidate_materials, &c.material.name))
        .collect();
    let spec = SweepSpec {
        kind,
        forward_configs: args.forward.clone(),
        materials: args.materials.clone(),
        area: args.area,
        sector_area: args.sector_area,
        temperature: args.temp,
        t_nom: args.tnom,
        v_ref: args.v_ref,
        candidates: combos,
        betas: args.beta.clone(),
        zdiff: !args.no_zdiff,
    };
    let rep = mismatch_sweep(&ctx.catalog, &spec, &ctx.study)?;
    let mut report = Report::new("sweep", seed, &["grid", "points", "records", "feasibility", "summary"]);
    for (i, p) in rep.points.iter().enumerate() {
        report.push(
            "points",
            vec![
                ("point", Cell::Int(i as i64)),
                ("config", text(p.config.as_str())),
                ("material", text(p.material.as_str())),
                ("area", num(p.area)),
                ("r", num(p.r)),
                ("temperature", num(p.temperature)),
            ],
        );
    }
    for r in &rep.records {
        report.push(
            "records",
            vec![
                ("point", Cell::Int(r.point as i64)),
                ("forward_config", text(r.forward_config.as_str())),
                ("forward_material", text(r.forward_material.as_str())),
                ("area", num(r.area)),
                ("temperature", num(r.temperature)),
                ("candidate", text(r.candidate.as_str())),
                ("z_diff", opt(r.z_diff)),
            ],
        );
        for (beta, ok) in &r.feasible {
            report.push(
                "feasibility",
                vec![
                    ("point", Cell::Int(r.point as i64)),
                    ("candidate", text(r.candidate.as_str())),
                    ("beta", num(*beta)),
                    ("feasible", Cell::Bool(*ok)),
                ],
            );
        }
    }
    for s in &rep.summary {
        for (beta, pct) in &s.feasible_pct {
            report.push(
                "summary",
                vec![
                    ("forward_config", text(s.forward_config.as_str())),
                    ("forward_material", text(s.forward_material.as_str())),
                    ("candidate", text(s.candidate.as_str())),
                    ("points", Cell::Int(s.points as i64)),
                    ("zdiff_min", opt(s.zdiff_min)),
                    ("zdiff_mean", opt(s.zdiff_mean)),
                    ("zdiff_max", opt(s.zdiff_max)),
                    ("beta", num(*beta)),
                    ("feasible_pct", num(*pct)),
                ],
            );
        }
    }
    report.push(
        "grid",
        vec![
            ("points", Cell::Int(rep.points.len() as i64)),
            ("skipped", Cell::Int(rep.skipped as i64)),
        ],
    );
    Ok(report)
}

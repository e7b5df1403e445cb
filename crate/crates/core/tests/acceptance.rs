//! Acceptance run: one PASS/FAIL line per criterion with the measured values.
//!
//! Criteria that fail are reported, not hidden; set `ACCEPTANCE_STRICT=1` to
//! turn any failure into a non-zero exit status.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use carson_core::catalog::{candidate_combinations, Catalog, Combination, LineKind};
use carson_core::conductor::radius_from_area;
use carson_core::forward::{
    forward_detailed, forward_pipeline, kron_reduce, ComplexMatrix, ForwardOptions, LineSpec, MatrixUnit,
    SequenceComponents, TransformMatrix,
};
use carson_core::inverse::{
    feasibility, mismatch_sweep, recover, slack_profile, standard_mismatch, standard_mismatch_matrix,
    tighten_bounds, validate_and_recover, build_model, CandidateFilter, Grid, Mode, ModelOptions, Objective,
    SequenceReference, StudyOptions, SweepSpec, Variable, ELIMINATION_ZDIFF,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn combo(cat: &Catalog, kind: LineKind, config: &str, material: &str) -> Combination {
    candidate_combinations(kind, cat)
        .into_iter()
        .find(|c| c.config.name == config && c.material.name == material)
        .unwrap()
}

fn max_abs_error(seq: &SequenceComponents, expect: [f64; 4]) -> f64 {
    let got = [seq.r00, seq.x00, seq.r11, seq.x11];
    got.iter().zip(expect).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max)
}

fn forward_overhead(cat: &Catalog) -> Outcome {
    let rows = [
        ("hori-4w", [0.7788, 1.1057, 0.4481, 0.3422]),
        ("neutral-under", [0.7554, 1.1072, 0.4472, 0.3671]),
        ("hori-3w", [0.5952, 1.5934, 0.4472, 0.3662]),
        ("tri-21.67", [0.5952, 1.5873, 0.4472, 0.3692]),
        ("tri-49.27", [0.5952, 1.6547, 0.4472, 0.3355]),
    ];
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for (cfg, expect) in rows {
        let line = LineSpec::catalog_standard(cat, cfg, "Mars", 75.0).unwrap();
        let seq = forward_pipeline(&cat.constants, &line, &ForwardOptions::series_only()).unwrap();
        worst = worst.max(max_abs_error(&seq, expect));
    }
    let dt = t0.elapsed();
    outcome(
        worst <= 1e-3 && dt < Duration::from_secs(1),
        format!("5 geometries, max |error| {worst:.2e} ohm/km, {}", secs(dt)),
    )
}

fn forward_cable(cat: &Catalog) -> Outcome {
    let rows = [
        ("cable-3core-7N", "Al-1350", 50.0, [0.8395, 2.2066, 0.6915, 0.0801]),
        ("cable-3core-19N", "Al-1350", 50.0, [0.8395, 2.202, 0.6915, 0.0772]),
        ("cable-3core-7N", "Cu", 30.0, [0.8645, 2.2466, 0.7165, 0.0842]),
        ("cable-4core-7N", "Al-1350", 50.0, [1.6289, 1.071, 0.6916, 0.0873]),
    ];
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for (cfg, mat, area, expect) in rows {
        let config = cat.config(cfg).unwrap();
        let r = radius_from_area(config.strands, area).unwrap();
        let line =
            LineSpec::in_standard_geometry(cat, config, cat.material(mat).unwrap(), r, 75.0, Some(1.35)).unwrap();
        let seq = forward_pipeline(&cat.constants, &line, &ForwardOptions::series_only()).unwrap();
        worst = worst.max(max_abs_error(&seq, expect));
    }
    let dt = t0.elapsed();
    outcome(
        worst <= 1e-3 && dt < Duration::from_secs(1),
        format!("4 rows, max |error| {worst:.2e} ohm/km, {}", secs(dt)),
    )
}

fn analytic_identities(cat: &Catalog) -> Outcome {
    let k = &cat.constants;
    let (mut e_r11, mut e_r00, mut e_x11, mut e_sym, mut runs) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    for cfg in cat.configs.iter().filter(|c| c.n_cond >= 3) {
        let material_names: Vec<&str> = cat.materials.iter().map(|m| m.name.as_str()).collect();
        for mat in material_names {
            for area in [16.0f64, 50.0, 95.0, 150.0, 240.0] {
                for t in [0.0, 20.0, 75.0, 90.0] {
                    let config = cat.config(&cfg.name).unwrap();
                    let area = if config.strand.k_r.is_none() { area.max(185.0) } else { area };
                    let r = radius_from_area(config.strands, area).unwrap();
                    let t_nom = config.family.is_cable().then_some(1.5);
                    let Some(line) = cat
                        .standard_geometry(&cfg.name)
                        .and(LineSpec::in_standard_geometry(cat, config, cat.material(mat).unwrap(), r, t, t_nom).ok())
                    else {
                        continue;
                    };
                    let rep = forward_detailed(k, &line, &ForwardOptions::series_only()).unwrap();
                    let z = &rep.impedances.z012.as_ref().unwrap().data;
                    let r_ac = rep.conductor.r_ac;
                    e_sym = e_sym.max((z[(1, 1)] - z[(2, 2)]).norm() / z[(1, 1)].norm());
                    if cfg.n_cond == 3 {
                        e_r11 = e_r11.max(rel(z[(1, 1)].re, r_ac));
                        e_r00 = e_r00.max(rel(z[(0, 0)].re, r_ac + 3.0 * k.k1));
                        if config.family.is_cable() && config.strand.k_r.is_some() {
                            let u1 = rep.geometry.u1.unwrap();
                            let expect = k.k2 * (2.0 * u1 / rep.conductor.gmr).ln();
                            e_x11 = e_x11.max((z[(1, 1)].im - expect).abs());
                        }
                    }
                    runs += 1;
                }
            }
        }
    }
    outcome(
        e_r11 <= 1e-12 && e_r00 <= 1e-12 && e_x11 <= 1e-9 && e_sym <= 1e-12,
        format!(
            "{runs} runs, R11 {e_r11:.1e}, R00 {e_r00:.1e}, X11 equilateral {e_x11:.1e}, Z11=Z22 {e_sym:.1e}"
        ),
    )
}

fn tri21_printed() -> SequenceReference {
    SequenceReference::series(LineKind::Overhead, 0.5952, 1.5873, 0.4472, 0.3692)
}

fn feasibility_screening(cat: &Catalog, opts: &StudyOptions) -> Outcome {
    let t0 = Instant::now();
    let ranked = recover(&tri21_printed(), cat, &CandidateFilter::default(), opts).unwrap();
    let dt = t0.elapsed();
    let by_config: BTreeMap<&str, f64> = ranked.iter().map(|r| (r.config.as_str(), r.z_diff)).collect();
    let three_max = ranked.iter().filter(|r| r.n_cond == 3).map(|r| r.z_diff).fold(0.0, f64::max);
    let hori = by_config["hori-4w"];
    let under = by_config["neutral-under"];
    let within = |z: f64, expected: f64| (z - expected).abs() <= 0.2 * expected;
    outcome(
        three_max <= 1e-4 && within(hori, 0.137) && within(under, 0.0653) && dt < Duration::from_secs(120),
        format!(
            "3-wire max z_diff {three_max:.2e}, hori-4w {hori:.4} (0.137), neutral-under {under:.4} (0.0653), {}",
            secs(dt)
        ),
    )
}

fn round_trip_tightening(cat: &Catalog, opts: &StudyOptions) -> Outcome {
    let t0 = Instant::now();
    let (mut cases, mut failures) = (0, Vec::new());
    let (mut gap_t, mut gap_r, mut gap_g, mut dev_r, mut dev_g) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for cfg in cat.configs.iter().filter(|c| c.n_cond >= 3) {
        for e in &cat.conductors {
            let fits = e.kind == cfg.kind
                && e.strands == cfg.strands
                && (cfg.kind == LineKind::Overhead || e.n_cond.contains(&cfg.n_cond));
            if !fits || cat.standard_geometry(&cfg.name).is_none() {
                continue;
            }
            for t in [20.0, 75.0] {
                let line = LineSpec::catalog_standard(cat, &cfg.name, &e.code, t).unwrap();
                let rep = forward_detailed(&cat.constants, &line, &ForwardOptions::series_only()).unwrap();
                let reference = SequenceReference::from_components(cfg.kind, rep.sequence.as_ref().unwrap());
                let combination = Combination {
                    config: cfg.clone(),
                    material: line.material.clone(),
                };
                let f = feasibility(cat, &combination, &reference, opts).unwrap();
                let b = tighten_bounds(cat, &combination, &reference, opts, &[f.recovered.clone()]).unwrap();
                cases += 1;
                let standard = |v: Variable| match v {
                    Variable::Radius => Some(e.r_std),
                    Variable::U1 => rep.geometry.u1,
                    Variable::U2 => rep.geometry.u2,
                    Variable::V1 => rep.geometry.v1,
                    Variable::VRef => Some(rep.geometry.v_ref),
                    _ => None,
                };
                let mut ok = true;
                for entry in b.entries.iter().filter(|e| !e.fixed) {
                    let v = entry.variable;
                    let mid = 0.5 * (entry.min + entry.max);
                    if v == Variable::Temperature {
                        gap_t = gap_t.max(entry.gap);
                        ok &= entry.gap <= 2.0;
                    } else if v == Variable::Radius {
                        gap_r = gap_r.max(entry.gap);
                        let d = 100.0 * (mid - e.r_std).abs() / e.r_std;
                        dev_r = dev_r.max(d);
                        ok &= entry.gap <= 0.005 && d <= 0.1;
                    } else if v.is_geometry() {
                        let s = standard(v).unwrap();
                        gap_g = gap_g.max(entry.gap);
                        let d = 100.0 * (mid - s).abs() / s.abs();
                        dev_g = dev_g.max(d);
                        ok &= entry.gap <= 0.04 && d <= 0.001;
                    }
                }
                if !ok {
                    failures.push(format!("{}/{}/{t}", cfg.name, e.code));
                }
            }
        }
    }
    outcome(
        failures.is_empty() && cases > 0,
        format!(
            "{cases} cases, max gap T {gap_t:.1e} degC, r {gap_r:.1e} mm, geometry {gap_g:.1e} mm; \
             max deviation r {dev_r:.1e}%, geometry {dev_g:.1e}%{}; {}",
            if failures.is_empty() { String::new() } else { format!("; failing {}", failures.join(", ")) },
            secs(t0.elapsed())
        ),
    )
}

/// Slack ranges on the tri-21.67 forward references, and the full profile
/// reused by the nesting check.
fn slack_ranges(cat: &Catalog, opts: &StudyOptions) -> (Outcome, bool) {
    let t0 = Instant::now();
    let line = LineSpec::catalog_standard(cat, "tri-21.67", "Mars", 75.0).unwrap();
    let seq = forward_pipeline(&cat.constants, &line, &ForwardOptions::series_only()).unwrap();
    let reference = SequenceReference::from_components(LineKind::Overhead, &seq);
    let betas = [0.0, 0.01, 0.03, 0.05];
    let vars = [Variable::Radius, Variable::Temperature, Variable::U1];
    let tri = combo(cat, LineKind::Overhead, "tri-21.67", "Al-1350");
    let prof = slack_profile(cat, &tri, &reference, &betas, &vars, opts).unwrap();
    let last = &prof[3];
    let (u_lo, u_hi) = last.ranges.get(&Variable::U1).copied().unwrap_or((f64::NAN, f64::NAN));
    let (r_lo, r_hi) = last.ranges.get(&Variable::Radius).copied().unwrap_or((f64::NAN, f64::NAN));
    let near = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol * b;
    let pass = last.feasible
        && near(u_lo, 694.0, 0.03)
        && near(u_hi, 1500.0, 0.03)
        && near(r_lo, 1.587, 0.01)
        && near(r_hi, 2.017, 0.01);

    let mut nested = prof.iter().all(|p| p.feasible);
    for w in prof.windows(2) {
        for v in vars {
            match (w[0].ranges.get(&v), w[1].ranges.get(&v)) {
                (Some(&(a0, b0)), Some(&(a1, b1))) => {
                    let tol = 1e-6 * (1.0 + a0.abs().max(b0.abs()));
                    nested &= a1 <= a0 + tol && b1 >= b0 - tol;
                }
                _ => nested = false,
            }
        }
    }
    (
        outcome(
            pass,
            format!(
                "beta 0.05: u1 [{u_lo:.1}, {u_hi:.1}] mm, r [{r_lo:.4}, {r_hi:.4}] mm, {}",
                secs(t0.elapsed())
            ),
        ),
        nested,
    )
}

fn mismatch_matrix(cat: &Catalog, opts: &StudyOptions) -> Outcome {
    let t0 = Instant::now();
    let codes = ["LVABC4x25", "LVABC4x50", "LVABC4x95", "UGC16x4Cu", "UGC50x4Cu", "UGC240x4Al"];
    let m = standard_mismatch_matrix(cat, &codes, 4, 75.0, 0.05, opts).unwrap();
    let expected_off: [(&str, &str); 3] =
        [("LVABC4x25", "UGC16x4Cu"), ("UGC16x4Cu", "LVABC4x25"), ("LVABC4x95", "UGC50x4Cu")];
    let mut wrong = Vec::new();
    for (i, f) in codes.iter().enumerate() {
        for (j, c) in codes.iter().enumerate() {
            let expect = i == j || expected_off.contains(&(*f, *c));
            if m.cells[i][j].flagged != expect {
                wrong.push(format!("{f}->{c}"));
            }
        }
    }
    outcome(
        wrong.is_empty(),
        format!(
            "pattern {} {}, {}",
            m.pattern().join("/"),
            if wrong.is_empty() { "as expected".to_string() } else { format!("differs at {}", wrong.join(", ")) },
            secs(t0.elapsed())
        ),
    )
}

fn coarse_sweep(cat: &Catalog, opts: &StudyOptions) -> Outcome {
    let t0 = Instant::now();
    let kind = LineKind::Overhead;
    let spec = SweepSpec {
        kind,
        forward_configs: cat
            .configs
            .iter()
            .filter(|c| c.kind == kind && c.n_cond >= 3)
            .map(|c| c.name.clone())
            .collect(),
        materials: vec!["Al-1350".into()],
        area: Grid::new(15.0, 240.0, 25.0),
        sector_area: Grid::single(185.0),
        temperature: Grid::new(20.0, 75.0, 15.0),
        t_nom: 1.5,
        v_ref: None,
        candidates: candidate_combinations(kind, cat),
        betas: vec![0.0, 0.01, 0.03, 0.05],
        zdiff: true,
    };
    let rep = mismatch_sweep(cat, &spec, opts).unwrap();
    let (mut wrong, mut wrong_ok, mut right, mut right_ok, mut cross, mut cross_ok) = (0, 0, 0, 0, 0, 0);
    let mut misses = Vec::new();
    for r in &rep.records {
        let z = r.z_diff.unwrap_or(f64::INFINITY);
        if r.forward_n_cond != r.candidate_n_cond {
            wrong += 1;
            wrong_ok += usize::from((0.05..=0.3).contains(&z));
        } else {
            right += 1;
            if z <= 1e-3 {
                right_ok += 1;
            } else {
                misses.push(format!("{}->{} A={} T={} z={z:.2e}", r.forward_config, r.candidate, r.area, r.temperature));
            }
        }
        if r.forward_n_cond == 3 && r.candidate_n_cond == 4 {
            for (_, feasible) in &r.feasible {
                cross += 1;
                cross_ok += usize::from(!feasible);
            }
        }
    }
    let pct = |a: usize, n: usize| 100.0 * a as f64 / n.max(1) as f64;
    let (pw, pr, pc) = (pct(wrong_ok, wrong), pct(right_ok, right), pct(cross_ok, cross));
    outcome(
        pw >= 95.0 && pr >= 99.0 && pc >= 95.0,
        format!(
            "{} points; wrong count in band {wrong_ok}/{wrong} ({pw:.1}%), correct count <= 1e-3 {right_ok}/{right} \
             ({pr:.1}%), 3w->4w infeasible {cross_ok}/{cross} ({pc:.1}%); {}{}",
            rep.points.len(),
            secs(t0.elapsed()),
            if misses.is_empty() { String::new() } else { format!("; above 1e-3: {}", misses.join("; ")) }
        ),
    )
}

/// Percent mismatch of each standard cable against the best-ranked
/// surviving four-core candidate of matching stranding and material.
fn utility_row(cat: &Catalog, reference: &SequenceReference, temperature: Option<f64>, opts: &StudyOptions) -> (bool, BTreeMap<String, f64>) {
    let mut o = opts.clone();
    o.model.temperature = temperature;
    let four_core = CandidateFilter {
        n_cond: Some(4),
        buried: None,
    };
    let v = validate_and_recover(reference, cat, &four_core, &o).unwrap();
    let mut row: BTreeMap<String, f64> = BTreeMap::new();
    for f in v.ranked.iter().filter(|f| f.status.usable() && f.z_diff <= ELIMINATION_ZDIFF) {
        for m in standard_mismatch(cat, f).into_iter().filter(|m| m.variable == Variable::Radius) {
            row.entry(m.code).or_insert(m.percent);
        }
    }
    (v.flags.fabricated_zero_sequence && v.dropped_zero_sequence, row)
}

fn utility_validation(cat: &Catalog, opts: &StudyOptions) -> Outcome {
    let t0 = Instant::now();
    let rows = [
        ("UGC16x4Cu", (4.6, 0.089, 1.15, 0.089)),
        ("UGC50x4Cu", (1.55, 0.082, 0.388, 0.082)),
        ("UGC240x4Al", (0.5, 0.062, 0.126, 0.062)),
    ];
    let mut flagged = 0;
    let mut parts = Vec::new();
    let mut pass = true;
    for (code, v) in rows {
        let reference = SequenceReference::series(LineKind::Cable, v.0, v.1, v.2, v.3);
        let (fabricated, _) = utility_row(cat, &reference, None, opts);
        flagged += usize::from(fabricated);
        let target = match code {
            "UGC240x4Al" => Some((None, 3.6)),
            "UGC50x4Cu" => Some((Some(20.0), 2.5)),
            _ => None,
        };
        if let Some((t, expected)) = target {
            let (_, row) = if t.is_some() { utility_row(cat, &reference, t, opts) } else { utility_row(cat, &reference, None, opts) };
            let best = row.iter().min_by(|a, b| a.1.total_cmp(b.1));
            let own = row.get(code).copied();
            let ok = matches!(best, Some((c, _)) if c == code) && own.map_or(false, |p| (p - expected).abs() <= 1.0);
            pass &= ok;
            parts.push(format!(
                "{code}{}: {:.2}% (expected {expected}%), nearest {}",
                if t.is_some() { " with T known" } else { "" },
                own.unwrap_or(f64::NAN),
                best.map_or("none".to_string(), |(c, p)| format!("{c} {p:.2}%"))
            ));
        }
    }
    pass &= flagged == rows.len();
    outcome(
        pass,
        format!("{flagged}/3 rows flagged; {}; {}", parts.join("; "), secs(t0.elapsed())),
    )
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn property_suites(cat: &Catalog, opts: &StudyOptions, slack_nested: bool) -> Outcome {
    let t0 = Instant::now();
    let models = common::all_models(cat);

    let (mut resid, mut gap) = (0.0f64, 0.0f64);
    for m in &models {
        let (r, g, _) = common::oracle_gap(m, 8);
        resid = resid.max(r);
        gap = gap.max(g);
    }

    let mut deriv = 0.0f64;
    let mut fd_models = models;
    let tri = combo(cat, LineKind::Overhead, "tri-21.67", "Al-1350");
    let mo = ModelOptions::default();
    fd_models.push(
        build_model(cat, &tri, &common::oh_reference(), Mode::Slack(0.05), Objective::BandExcess, &mo).unwrap(),
    );
    fd_models.push(
        build_model(cat, &tri, &common::oh_reference(), Mode::Slack(0.05), Objective::Maximize(Variable::U1), &mo)
            .unwrap(),
    );
    for m in &fd_models {
        for x in common::interior_points(m, 2) {
            deriv = deriv.max(common::derivative_error(m, &x));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let a = TransformMatrix::new();
    let (mut seq_rt, mut kron_rt) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let m = random_matrix(&mut rng, 3);
        seq_rt = seq_rt.max((a.to_phase(&a.to_sequence(&m)) - &m).camax());
        let g = random_matrix(&mut rng, 4);
        let mut z = (&g + g.transpose()) * Complex64::new(0.5, 0.0);
        for i in 0..4 {
            z[(i, i)] += Complex64::new(4.0, 4.0);
        }
        let red = kron_reduce(&ComplexMatrix::new(MatrixUnit::OhmPerKm, z.clone())).unwrap().data;
        let i3 = DVector::from_fn(3, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let i_n = -(0..3).map(|j| z[(3, j)] * i3[j]).sum::<Complex64>() / z[(3, 3)];
        let i4 = DVector::from_fn(4, |i, _| if i < 3 { i3[i] } else { i_n });
        let v = &z * &i4;
        kron_rt = kron_rt.max((v.rows(0, 3).into_owned() - &red * &i3).camax()).max(v[3].norm());
    }

    let run = |workers| {
        let o = StudyOptions {
            workers,
            ..opts.clone()
        };
        serde_json::to_string(&recover(&tri21_printed(), cat, &CandidateFilter::default(), &o).unwrap()).unwrap()
    };
    let first = run(Some(1));
    let deterministic = first == run(Some(1)) && first == run(Some(4));

    let pass = resid <= 1e-9 && gap <= 1e-9 && deriv <= 1e-4 && slack_nested && seq_rt <= 1e-12 && kron_rt <= 1e-12 && deterministic;
    outcome(
        pass,
        format!(
            "oracle residual {resid:.1e}, real form vs forward {gap:.1e}, derivatives {deriv:.1e}, \
             slack nesting {}, sequence round trip {seq_rt:.1e}, Kron {kron_rt:.1e} (1000 matrices), \
             deterministic {deterministic}; {}",
            if slack_nested { "holds" } else { "violated" },
            secs(t0.elapsed())
        ),
    )
}

fn main() {
    let cat = Catalog::bundled();
    let opts = StudyOptions::default();
    let t0 = Instant::now();

    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("forward overhead reproduction", forward_overhead(&cat)));
    results.push(("forward cable reproduction", forward_cable(&cat)));
    results.push(("analytic identities", analytic_identities(&cat)));
    results.push(("feasibility screening", feasibility_screening(&cat, &opts)));
    results.push(("round-trip bound tightening", round_trip_tightening(&cat, &opts)));
    let (slack, nested) = slack_ranges(&cat, &opts);
    results.push(("slack ranges", slack));
    results.push(("mismatch matrix", mismatch_matrix(&cat, &opts)));
    results.push(("coarse overhead sweep", coarse_sweep(&cat, &opts)));
    results.push(("utility validation", utility_validation(&cat, &opts)));
    results.push(("property suites", property_suites(&cat, &opts, nested)));

    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {}",
        results.len() - failed,
        secs(t0.elapsed())
    );
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").map_or(false, |v| v == "1") {
        std::process::exit(1);
    }
}

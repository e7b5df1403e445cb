//! Checks shared by the integration suites.

#![allow(dead_code)]

use carson_core::catalog::{candidate_combinations, Catalog, LineKind};
use carson_core::forward::{forward_pipeline, ForwardOptions, LineSpec, SequenceComponents};
use carson_core::inverse::{build_model, start_points, InverseModel, Mode, ModelOptions, Objective, SequenceReference};
use carson_nlp::NlpProblem;

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

pub fn oh_reference() -> SequenceReference {
    SequenceReference::series(LineKind::Overhead, 0.5952, 1.5873, 0.4472, 0.3692)
}

pub fn cable_reference(cat: &Catalog, shunt: bool) -> SequenceReference {
    let line = LineSpec::catalog_standard(cat, "cable-4core-7N", "UGC50x4Cu", 40.0).unwrap();
    let opts = if shunt { ForwardOptions::default() } else { ForwardOptions::series_only() };
    SequenceReference::from_components(LineKind::Cable, &forward_pipeline(&cat.constants, &line, &opts).unwrap())
}

/// Feasibility models of every candidate; cables with round strands carry
/// shunt references.
pub fn all_models(cat: &Catalog) -> Vec<InverseModel> {
    let opts = ModelOptions::default();
    let mut out = Vec::new();
    for c in candidate_combinations(LineKind::Overhead, cat) {
        out.push(build_model(cat, &c, &oh_reference(), Mode::Feasibility, Objective::ZDiff, &opts).unwrap());
    }
    for c in candidate_combinations(LineKind::Cable, cat) {
        let r = cable_reference(cat, c.config.strand.k_r.is_some());
        out.push(build_model(cat, &c, &r, Mode::Feasibility, Objective::ZDiff, &opts).unwrap());
    }
    out
}

pub fn sequence_gap(a: &SequenceComponents, b: &SequenceComponents) -> f64 {
    let mut g = rel(a.r00, b.r00).max(rel(a.x00, b.x00)).max(rel(a.r11, b.r11)).max(rel(a.x11, b.x11));
    for (x, y) in [(a.b00, b.b00), (a.b11, b.b11)] {
        match (x, y) {
            (Some(x), Some(y)) => g = g.max(rel(x, y)),
            (None, None) => {}
            _ => g = f64::INFINITY,
        }
    }
    g
}

/// Largest structural residual and largest gap between the model's sequence
/// components and the forward pipeline, over `n` start points.
pub fn oracle_gap(model: &InverseModel, n: usize) -> (f64, f64, usize) {
    let opts = ForwardOptions {
        include_shunt: model.with_shunt,
        ..ForwardOptions::series_only()
    };
    let (mut resid, mut gap, mut count) = (0.0f64, 0.0f64, 0);
    for z in start_points(model, n, 7) {
        let point = model.point(&z);
        for r in model.structural_residuals(&point).unwrap() {
            resid = resid.max(r.value.abs());
        }
        let inner = model.sequence_at(&point).unwrap();
        let outer = forward_pipeline(&model.constants, &model.line_spec(&point).unwrap(), &opts).unwrap();
        gap = gap.max(sequence_gap(&inner, &outer));
        count += 1;
    }
    (resid, gap, count)
}

/// Largest relative disagreement between the automatic first and second
/// derivatives and central differences at `x`.
pub fn derivative_error(model: &impl NlpProblem, x: &[f64]) -> f64 {
    let d = model.derivatives(x).expect("derivatives");
    let (f0, c0) = model.values(x).expect("values");
    let mut worst = rel(d.objective, f0);
    for (i, c) in c0.iter().enumerate() {
        worst = worst.max(rel(d.constraints[i], *c));
    }
    for j in 0..x.len() {
        let h = 1e-6 * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (fp, cp) = model.values(&xp).unwrap();
        let (fm, cm) = model.values(&xm).unwrap();
        worst = worst.max(rel((fp - fm) / (2.0 * h), d.gradient[j]));
        for i in 0..cp.len() {
            worst = worst.max(rel((cp[i] - cm[i]) / (2.0 * h), d.jacobian[(i, j)]));
        }
        let dp = model.derivatives(&xp).unwrap();
        let dm = model.derivatives(&xm).unwrap();
        for k in 0..x.len() {
            worst = worst.max(rel((dp.gradient[k] - dm.gradient[k]) / (2.0 * h), d.hessian[(k, j)]));
            for i in 0..cp.len() {
                let fd = (dp.jacobian[(i, k)] - dm.jacobian[(i, k)]) / (2.0 * h);
                worst = worst.max(rel(fd, d.constraint_hessians[i][(k, j)]));
            }
        }
    }
    worst
}

/// A start point of `model` extended with positive auxiliary values.
pub fn interior_points(model: &InverseModel, n: usize) -> Vec<Vec<f64>> {
    start_points(model, n, 11)
        .into_iter()
        .enumerate()
        .map(|(s, mut x)| {
            x.extend((0..model.num_aux()).map(|a| 0.05 + 0.1 * (a + s) as f64));
            x
        })
        .collect()
}

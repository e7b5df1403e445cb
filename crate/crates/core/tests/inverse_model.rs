//! The inverse model against the forward pipeline and against finite
//! differences.

use carson_core::catalog::{candidate_combinations, Catalog, Combination, LineKind};
use carson_core::forward::SequenceComponents;
use carson_core::inverse::{
    build_model, feasibility, slack_analysis, zdiff, Mode, ModelOptions, Objective, StudyOptions, Variable,
};
use carson_core::Error;

mod common;
use common::{all_models, cable_reference, derivative_error, interior_points, oh_reference, oracle_gap};

fn combo(cat: &Catalog, kind: LineKind, config: &str, material: &str) -> Combination {
    candidate_combinations(kind, cat)
        .into_iter()
        .find(|c| c.config.name == config && c.material.name == material)
        .unwrap()
}

#[test]
fn zdiff_of_exact_and_perturbed_components() {
    let r = oh_reference();
    let exact = SequenceComponents {
        r00: 0.5952,
        x00: 1.5873,
        r11: 0.4472,
        x11: 0.3692,
        b00: None,
        b11: None,
    };
    assert_eq!(zdiff(&exact, &r).unwrap(), 0.0);
    let off = SequenceComponents {
        r00: 0.5952 * 1.06,
        ..exact
    };
    assert!((zdiff(&off, &r).unwrap() - 0.015).abs() < 1e-12);
    // only the components present in the reference count
    let partial = r.without_zero_sequence();
    assert_eq!(zdiff(&off, &partial).unwrap(), 0.0);
    let shunted = r.with_shunt(3.0, 4.0);
    assert!(matches!(zdiff(&exact, &shunted), Err(Error::Contract(_))));
}

#[test]
fn references_must_be_positive() {
    let mut r = oh_reference();
    r.x11 = -0.1;
    assert!(matches!(r.validate(), Err(Error::Domain(_))));
    let mut r = oh_reference();
    r.b00 = Some(1.0);
    assert!(matches!(r.validate(), Err(Error::Contract(_))));
}

#[test]
fn model_construction_errors() {
    let cat = Catalog::bundled();
    let opts = ModelOptions::default();
    let sector = combo(&cat, LineKind::Cable, "cable-4core-48N", "Al-1350");
    let shunted = cable_reference(&cat, true);
    assert!(matches!(
        build_model(&cat, &sector, &shunted, Mode::Feasibility, Objective::ZDiff, &opts),
        Err(Error::UnsupportedGeometry(_))
    ));
    let tri = combo(&cat, LineKind::Overhead, "tri-21.67", "Al-1350");
    assert!(matches!(
        build_model(&cat, &tri, &oh_reference(), Mode::Slack(-0.1), Objective::BandExcess, &opts),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        build_model(&cat, &tri, &shunted, Mode::Feasibility, Objective::ZDiff, &opts),
        Err(Error::Contract(_))
    ));
    assert!(matches!(
        build_model(&cat, &tri, &oh_reference(), Mode::Feasibility, Objective::BandExcess, &opts),
        Err(Error::Contract(_))
    ));
    assert!(matches!(
        slack_analysis(&cat, &tri, &oh_reference(), f64::NAN, &[Variable::Radius], &StudyOptions::default()),
        Err(Error::Domain(_))
    ));
}

#[test]
fn real_form_matches_forward_pipeline() {
    let cat = Catalog::bundled();
    let mut checked = 0;
    for model in all_models(&cat) {
        let (resid, gap, n) = oracle_gap(&model, 24);
        let label = model.combination.label();
        assert!(resid <= 1e-9, "{label}: structural residual {resid}");
        assert!(gap <= 1e-9, "{label}: real form and forward pipeline differ by {gap}");
        checked += n;
    }
    assert!(checked > 200);
}

#[test]
fn derivatives_match_finite_differences() {
    let cat = Catalog::bundled();
    let opts = ModelOptions::default();
    let mut models = all_models(&cat);
    let tri = combo(&cat, LineKind::Overhead, "tri-21.67", "Al-1350");
    let hori = combo(&cat, LineKind::Overhead, "hori-4w", "Al-1350");
    let cable = combo(&cat, LineKind::Cable, "cable-4core-7N", "Cu");
    let shunted = cable_reference(&cat, true);
    models.push(build_model(&cat, &tri, &oh_reference(), Mode::Slack(0.05), Objective::BandExcess, &opts).unwrap());
    models.push(build_model(&cat, &tri, &oh_reference(), Mode::Slack(0.05), Objective::Minimize(Variable::Radius), &opts).unwrap());
    models.push(build_model(&cat, &hori, &oh_reference(), Mode::Slack(0.03), Objective::Maximize(Variable::U2), &opts).unwrap());
    models.push(build_model(&cat, &cable, &shunted, Mode::FixedSequence, Objective::Maximize(Variable::TNom), &opts).unwrap());
    models.push(build_model(&cat, &cable, &shunted, Mode::Slack(0.05), Objective::Minimize(Variable::U1), &opts).unwrap());

    for model in &models {
        for x in interior_points(model, 3) {
            let err = derivative_error(model, &x);
            assert!(err <= 1e-4, "{}: derivative error {err} at {x:?}", model.combination.label());
        }
    }
}

#[test]
fn recovered_point_reproduces_reference() {
    let cat = Catalog::bundled();
    let tri = combo(&cat, LineKind::Overhead, "tri-21.67", "Al-1350");
    let res = feasibility(&cat, &tri, &oh_reference(), &StudyOptions::default()).unwrap();
    assert!(res.status.usable());
    assert!(res.z_diff < 1e-4, "{}", res.z_diff);
    let fitted = res.fitted.unwrap();
    assert!((fitted.r11 - 0.4472).abs() < 1e-4);
}

//! Forward values against the published standard-geometry and make-up cable tables.

use carson_core::catalog::Catalog;
use carson_core::conductor::radius_from_area;
use carson_core::forward::{forward_pipeline, ForwardOptions, LineSpec, SequenceComponents};

fn close(seq: &SequenceComponents, expect: [f64; 4], tol: f64) {
    let got = [seq.r00, seq.x00, seq.r11, seq.x11];
    for (g, e) in got.iter().zip(expect) {
        assert!((g - e).abs() <= tol, "got {got:?}, expected {expect:?}");
    }
}

#[test]
fn overhead_standard_geometries_with_mars_at_75c() {
    let cat = Catalog::bundled();
    let rows = [
        ("hori-4w", [0.7788, 1.1057, 0.4481, 0.3422]),
        ("neutral-under", [0.7554, 1.1072, 0.4472, 0.3671]),
        ("hori-3w", [0.5952, 1.5934, 0.4472, 0.3662]),
        ("tri-21.67", [0.5952, 1.5873, 0.4472, 0.3692]),
        ("tri-49.27", [0.5952, 1.6547, 0.4472, 0.3355]),
    ];
    for (cfg, expect) in rows {
        let line = LineSpec::catalog_standard(&cat, cfg, "Mars", 75.0).unwrap();
        let seq = forward_pipeline(&cat.constants, &line, &ForwardOptions::series_only()).unwrap();
        println!("{cfg}: {seq:?}");
        close(&seq, expect, 1e-3);
    }
}

#[test]
fn make_up_cables() {
    let cat = Catalog::bundled();
    let rows = [
        ("cable-3core-7N", "Al-1350", 50.0, [0.8395, 2.2066, 0.6915, 0.0801]),
        ("cable-3core-19N", "Al-1350", 50.0, [0.8395, 2.202, 0.6915, 0.0772]),
        ("cable-3core-7N", "Cu", 30.0, [0.8645, 2.2466, 0.7165, 0.0842]),
        ("cable-4core-7N", "Al-1350", 50.0, [1.6289, 1.071, 0.6916, 0.0873]),
    ];
    for (cfg, mat, area, expect) in rows {
        let config = cat.config(cfg).unwrap();
        let r = radius_from_area(config.strands, area).unwrap();
        let line =
            LineSpec::in_standard_geometry(&cat, config, cat.material(mat).unwrap(), r, 75.0, Some(1.35)).unwrap();
        let seq = forward_pipeline(&cat.constants, &line, &ForwardOptions::series_only()).unwrap();
        println!("{cfg} {mat} {area}: {seq:?}");
        close(&seq, expect, 1e-3);
    }
}

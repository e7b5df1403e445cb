use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn bundled_catalog() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/catalog.json")
}

fn carson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carson"))
        .args(args)
        .env_remove("CARSON_CATALOG")
        .env_remove("CARSON_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn sequence(v: &Value, row: usize) -> [f64; 4] {
    let r = &v["tables"]["sequence"][row];
    ["r00", "x00", "r11", "x11"].map(|k| r[k].as_f64().unwrap())
}

fn close(got: [f64; 4], want: [f64; 4], tol: f64) -> bool {
    got.iter().zip(want).all(|(g, w)| (g - w).abs() <= tol)
}

#[test]
fn forward_standard_overhead_line() {
    let v = json(&carson(&["forward", "--config", "tri-21.67", "--conductor", "Mars", "--temp", "75"]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "forward");
    let got = sequence(&v, 0);
    assert!(close(got, [0.5952, 1.5873, 0.4472, 0.3692], 2e-4), "{got:?}");
}

#[test]
fn forward_made_up_cable() {
    let v = json(&carson(&[
        "forward", "--config", "cable-3core-7N", "--material", "Al-1350", "--area", "50", "--temp", "75", "--tnom",
        "1.35",
    ]));
    let got = sequence(&v, 0);
    assert!(close(got, [0.8395, 2.2066, 0.6915, 0.0801], 2e-4), "{got:?}");
    assert!(v["tables"]["sequence"][0]["b11"].as_f64().unwrap() > 0.0);
}

#[test]
fn forward_radius_below_bound_fails() {
    let out = carson(&["forward", "--config", "tri-21.67", "--material", "Al-1350", "--area", "5", "--temp", "75"]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("forward") && msg.contains("bound violation"), "{msg}");
    assert!(out.stdout.is_empty());
}

#[test]
fn forward_matrices_cover_the_chain() {
    let v = json(&carson(&[
        "forward", "--config", "cable-4core-7N", "--conductor", "UGC50x4Cu", "--temp", "40", "--emit-matrices",
    ]));
    let rows = v["tables"]["matrices"].as_array().unwrap();
    let mut sizes: BTreeMap<String, usize> = BTreeMap::new();
    for r in rows {
        *sizes.entry(r["matrix"].as_str().unwrap().to_string()).or_default() += 1;
    }
    let want: BTreeMap<String, usize> =
        [("z_car", 16), ("z_kr", 9), ("z012", 9), ("p", 16), ("c", 16), ("y", 16), ("y012", 9)]
            .into_iter()
            .map(|(k, n)| (k.to_string(), n))
            .collect();
    assert_eq!(sizes, want);
}

#[test]
fn bad_line_records_do_not_stop_the_run() {
    let out = carson(&["forward", "--input", data("lines.csv").to_str().unwrap()]);
    let v = json(&out);
    let ids: Vec<&str> = v["tables"]["sequence"].as_array().unwrap().iter().map(|r| r["line_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["mars", "makeup", "sector"]);
    // sector cables carry no shunt values
    assert!(v["tables"]["sequence"][2]["b11"].is_null());
    let errors: Vec<&str> = v["tables"]["errors"].as_array().unwrap().iter().map(|r| r["line_id"].as_str().unwrap()).collect();
    assert_eq!(errors, ["thin", "nomat", "badtemp"]);
}

#[test]
fn recover_screens_utility_records() {
    let out = carson(&["recover", "--input", data("utility.csv").to_str().unwrap()]);
    let v = json(&out);
    let flags = v["tables"]["flags"].as_array().unwrap();
    assert_eq!(flags.len(), 5);
    for f in flags {
        let cable = f["kind"] == "cable";
        assert_eq!(f["fabricated_zero_sequence"].as_bool(), Some(cable), "{f}");
        assert_eq!(f["dropped_zero_sequence"].as_bool(), Some(cable), "{f}");
        assert_eq!(f["unexplained"].as_bool(), Some(cable), "{f}");
    }
    let ranking = v["tables"]["ranking"].as_array().unwrap();
    let tri49 = ranking
        .iter()
        .find(|r| r["line_id"] == "mars-tri49" && r["config"] == "tri-49.27")
        .expect("tri-49.27 is ranked");
    let pct = tri49["u1_mismatch_pct"].as_f64().unwrap();
    assert!((pct - 20.5).abs() < 0.5, "{pct}");
    assert_eq!(tri49["r_nearest"], "Mars");
    // only three-wire combinations explain overhead records
    for r in ranking.iter().filter(|r| r["line_id"] == "mars-tri49") {
        let z = r["z_diff"].as_f64().unwrap_or(f64::INFINITY);
        assert_eq!(r["n_cond"] == 3, z < 1e-3, "{r}");
    }
    let ugc240 = ranking.iter().find(|r| r["line_id"] == "ugc240").unwrap();
    assert_eq!(ugc240["r_nearest"], "UGC240x4Al");
}

#[test]
fn malformed_reference_rows_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("refs.csv");
    std::fs::write(
        &path,
        "line_id,kind,r00,x00,r11,x11\nok,oh,0.600,1.631,0.452,0.347\nneg,oh,0.6,1.6,-0.4,0.3\nship,boat,1,1,1,1\n",
    )
    .unwrap();
    let out = carson(&["validate", "--input", path.to_str().unwrap()]);
    let v = json(&out);
    assert_eq!(v["tables"]["flags"].as_array().unwrap().len(), 1);
    let errors = v["tables"]["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 2);
    assert_eq!(errors[0]["line_id"], "neg");
}

#[test]
fn missing_required_column_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("refs.csv");
    std::fs::write(&path, "line_id,kind,r00,x00,r11\na,oh,1,1,1\n").unwrap();
    let out = carson(&["recover", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x11"));
}

#[test]
fn output_files_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("utility.csv");
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "1", "4"].iter().enumerate() {
        let path = dir.path().join(format!("run{i}.json"));
        let out = carson(&[
            "recover", "--input", input.to_str().unwrap(), "--workers", workers, "--output", path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

/// Rebuilds `table -> row -> field -> value` from long CSV.
fn csv_cells(bytes: &[u8]) -> BTreeMap<(String, usize, String), String> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        out.insert((rec[0].to_string(), rec[1].parse().unwrap(), rec[2].to_string()), rec[3].to_string());
    }
    out
}

#[test]
fn csv_and_json_carry_the_same_numbers() {
    let input = data("utility.csv");
    let base = ["recover", "--input", input.to_str().unwrap(), "--top", "4"];
    let v = json(&carson(&base));
    let csv_out = carson(&[&base[..], &["--format", "csv"]].concat());
    assert!(csv_out.status.success());
    let cells = csv_cells(&csv_out.stdout);

    let mut count = 0;
    for (name, rows) in v["tables"].as_object().unwrap() {
        for (i, row) in rows.as_array().unwrap().iter().enumerate() {
            for (field, value) in row.as_object().unwrap() {
                let s = &cells[&(name.clone(), i, field.clone())];
                match value {
                    Value::Null => assert!(s.is_empty()),
                    Value::Number(n) => assert_eq!(s.parse::<f64>().unwrap(), n.as_f64().unwrap(), "{name}.{field}"),
                    Value::Bool(b) => assert_eq!(s, &b.to_string()),
                    Value::String(t) => assert_eq!(s, t),
                    other => panic!("unexpected cell {other}"),
                }
                count += 1;
            }
        }
    }
    assert_eq!(count, cells.len());
}

#[test]
fn seed_flag_takes_precedence_over_environment() {
    let run = |env_seed: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_carson"));
        c.args(["forward", "--config", "tri-21.67", "--conductor", "Mars", "--temp", "75"]).env_remove("CARSON_CATALOG");
        match env_seed {
            Some(s) => c.env("CARSON_SEED", s),
            None => c.env_remove("CARSON_SEED"),
        };
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        json(&c.output().unwrap())["seed"].as_u64().unwrap()
    };
    assert_eq!(run(Some("42"), None), 42);
    assert_eq!(run(Some("42"), Some("7")), 7);
    assert_eq!(run(None, Some("7")), 7);
}

#[test]
fn catalog_flag_takes_precedence_over_environment() {
    let catalog = bundled_catalog();
    let base = ["forward", "--config", "tri-21.67", "--conductor", "Mars", "--temp", "75"];
    let missing = Command::new(env!("CARGO_BIN_EXE_carson"))
        .args(base)
        .env("CARSON_CATALOG", "/nonexistent/catalog.json")
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("catalog"));

    let flagged = Command::new(env!("CARGO_BIN_EXE_carson"))
        .args(base)
        .args(["--catalog", catalog.to_str().unwrap()])
        .env("CARSON_CATALOG", "/nonexistent/catalog.json")
        .output()
        .unwrap();
    let got = sequence(&json(&flagged), 0);
    assert!(close(got, [0.5952, 1.5873, 0.4472, 0.3692], 2e-4));
}

#[test]
fn sweep_rejects_grids_outside_the_catalog() {
    let out = carson(&[
        "sweep", "--kind", "cable", "--forward", "cable-4core-48N", "--materials", "Al-1350", "--sector-area",
        "100:200:50", "--temp", "20",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bound violation"));
    let empty = carson(&[
        "sweep", "--kind", "oh", "--forward", "tri-21.67", "--materials", "Al-1350", "--area", "40:15:5",
    ]);
    assert_eq!(empty.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&empty.stderr).contains("empty"));
}

#[test]
fn sweep_skips_points_outside_the_radius_bounds() {
    let v = json(&carson(&[
        "sweep", "--kind", "oh", "--forward", "tri-21.67", "--materials", "Al-1350", "--area", "15:40:5", "--temp",
        "20:75:55", "--candidates", "tri-21.67,hori-4w", "--beta", "0,0.03",
    ]));
    let grid = &v["tables"]["grid"][0];
    assert_eq!(grid["skipped"], 2);
    assert_eq!(grid["points"], 10);
    let summary = v["tables"]["summary"].as_array().unwrap();
    let own = summary.iter().find(|r| r["candidate"] == "tri-21.67/Al-1350" && r["beta"] == 0.0).unwrap();
    assert_eq!(own["feasible_pct"].as_f64(), Some(100.0));
    assert!(own["zdiff_max"].as_f64().unwrap() < 1e-3);
}

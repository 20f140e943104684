use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gue-painleve")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Data rows of a table (manifest and header stripped).
fn rows(csv: &str) -> Vec<Vec<f64>> {
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# manifest {"));
    lines.next().unwrap();
    lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn airy(s: f64) -> (f64, f64) {
    let d = gue_painleve::special_fn::airy_derivs(s, 1, &gue_painleve::PrecisionConfig::default()).unwrap();
    (d[0], d[1])
}

#[test]
fn gap_table_through_zero() {
    let t = rows(&ok(&["gap", "--n", "1", "--s-min", "-1", "--s-max", "1", "--step", "0.1"]));
    assert_eq!(t.len(), 21);
    let zero = t.iter().find(|r| r[0] == 0.0).expect("exact zero row");
    assert!((zero[1] - 0.5).abs() < 1e-14);
    assert!((zero[2] - 0.5f64.ln()).abs() < 1e-14);
}

#[test]
fn gap_n2_at_zero_and_routes_agree() {
    let oracle = 0.25 - 1.0 / (2.0 * std::f64::consts::PI);
    let args = |m: &'static str| ["gap", "--n", "2", "--s-min", "-2", "--s-max", "2", "--step", "0.25", "--method", m];
    let det = rows(&ok(&args("det")));
    let ode = rows(&ok(&args("ode")));
    let toda = rows(&ok(&args("toda")));
    let zero = det.iter().find(|r| r[0] == 0.0).unwrap();
    assert!((zero[1] - oracle).abs() < 1e-12);
    for ((d, o), t) in det.iter().zip(&ode).zip(&toda) {
        assert_eq!(d[0], o[0]);
        assert!((d[1] - o[1]).abs() < 1e-5, "s={}", d[0]);
        assert!((d[1] - t[1]).abs() < 1e-10, "s={}", d[0]);
    }
}

#[test]
fn moment_tables() {
    let f = rows(&ok(&["moment", "--kind", "f", "--n", "1", "--a", "2", "--s-min", "-2", "--s-max", "2", "--step", "0.5"]));
    for r in &f {
        assert!((r[1] - (r[0] * r[0] + 0.5)).abs() < 1e-12, "{r:?}");
    }
    let ones = rows(&ok(&["moment", "--kind", "f", "--n", "3", "--a", "0", "--s-min", "-1", "--s-max", "1", "--step", "0.5"]));
    assert!(ones.iter().all(|r| r[1] == 1.0));
    let g = ["--n", "3", "--s-min", "-1.5", "--s-max", "1.5", "--step", "0.5"];
    let gap = rows(&ok(&[&["gap"][..], &g].concat()));
    let et = rows(&ok(&[&["moment", "--kind", "etilde", "--a", "0"][..], &g].concat()));
    assert_eq!(gap, et);
    let ode = rows(&ok(&[&["moment", "--kind", "etilde", "--a", "1", "--method", "ode"][..], &g].concat()));
    let det = rows(&ok(&[&["moment", "--kind", "etilde", "--a", "1"][..], &g].concat()));
    for (o, d) in ode.iter().zip(&det) {
        assert!((o[2] - d[2]).abs() < 1e-5);
    }
}

#[test]
fn softedge_tables() {
    let grid = ["--s-min", "-2", "--s-max", "2", "--step", "0.5"];
    let f1 = rows(&ok(&[&["softedge", "--quantity", "f-airy", "--a", "1"][..], &grid].concat()));
    let f2 = rows(&ok(&[&["softedge", "--quantity", "f-airy", "--a", "2"][..], &grid].concat()));
    for (r1, r2) in f1.iter().zip(&f2) {
        let (ai, aip) = airy(r1[0]);
        assert!((r1[1] - ai).abs() < 1e-12);
        assert!((r2[1] - (aip * aip - r2[0] * ai * ai)).abs() < 1e-12);
    }
    let u = rows(&ok(&["softedge", "--quantity", "u", "--a", "0.5", "--s-min", "-12", "--s-max", "-11", "--step", "0.5"]));
    assert!((u[0][1] - 36.0).abs() < 1e-8, "{}", u[0][1]);
    let e = rows(&ok(&[&["softedge", "--quantity", "e"][..], &grid].concat()));
    assert!(e.windows(2).all(|w| w[1][1] > w[0][1]));
    assert!(e.iter().all(|r| r[1] > 0.0 && r[1] < 1.0));
    let pm = rows(&ok(&[&["softedge", "--quantity", "pmax-ratio", "--s0", "0"][..], &grid].concat()));
    assert!((pm.iter().find(|r| r[0] == 0.0).unwrap()[1] - 1.0).abs() < 1e-14);
}

#[test]
fn verify_suites_report_and_exit_with_failures() {
    for suite in ["weyl", "identities", "duality"] {
        let out = run(&["verify", "--suite", suite]);
        let report = json(&String::from_utf8(out.stdout).unwrap());
        assert_eq!(report["failures"], 0, "{suite}: {report}");
        assert_eq!(out.status.code(), Some(0));
        assert!(report["manifest"]["command"] == "verify");
    }
    let weyl = json(&ok(&["verify", "--suite", "weyl"]));
    for c in weyl["checks"].as_array().unwrap() {
        assert!(c["residual"].as_f64().unwrap() < 1e-12);
    }
    // A tolerance nothing can meet makes every covariance check fail.
    let out = run(&["verify", "--suite", "backlund", "--tol", "1e-30"]);
    let report = json(&String::from_utf8(out.stdout).unwrap());
    let failures = report["failures"].as_u64().unwrap();
    assert!(failures > 0);
    assert_eq!(out.status.code(), Some(failures as i32));
}

#[test]
fn sampling_reports() {
    let gap = json(&ok(&["sample", "--n", "2", "--samples", "100000", "--quantity", "gap", "--point", "0", "--seed", "7"]));
    let want = 0.25 - 1.0 / (2.0 * std::f64::consts::PI);
    assert!((gap["reference"].as_f64().unwrap() - want).abs() < 1e-12);
    assert!(gap["z_score"].as_f64().unwrap() < 3.0);
    assert_eq!(gap["manifest"]["seed"], 7);
    let f = json(&ok(&["sample", "--n", "1", "--samples", "100000", "--quantity", "f", "--point", "0", "--a", "2"]));
    assert!((f["estimate"].as_f64().unwrap() - 0.5).abs() < 3.0 * f["std_error"].as_f64().unwrap());
    let et = json(&ok(&["sample", "--n", "2", "--samples", "20000", "--quantity", "etilde", "--point", "0.5", "--seed", "3"]));
    let g2 = json(&ok(&["sample", "--n", "2", "--samples", "20000", "--quantity", "gap", "--point", "0.5", "--seed", "3"]));
    assert_eq!(et["estimate"], g2["estimate"]);
}

#[test]
fn manifests_replay_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("gap.csv");
    let second = dir.path().join("again.csv");
    let p = |x: &Path| x.to_str().unwrap().to_string();
    ok(&["gap", "--n", "3", "--s-min", "-1", "--s-max", "1", "--step", "0.25", "--method", "ode", "--out", &p(&first)]);
    ok(&["rerun", &p(&first), "--out", &p(&second)]);
    let a = std::fs::read_to_string(&first).unwrap();
    let b = std::fs::read_to_string(&second).unwrap();
    assert_eq!(a.lines().skip(1).collect::<Vec<_>>(), b.lines().skip(1).collect::<Vec<_>>());
    assert!(!a.contains('\r'));
    let report = dir.path().join("sample.json");
    ok(&["sample", "--n", "1", "--samples", "5000", "--quantity", "gap", "--point", "0", "--seed", "11", "--out", &p(&report)]);
    let again = json(&ok(&["rerun", &p(&report)]));
    let orig = json(&std::fs::read_to_string(&report).unwrap());
    assert_eq!(orig["estimate"], again["estimate"]);
}

#[test]
fn bad_input_exits_nonzero() {
    for args in [
        &["gap", "--n", "2", "--s-min", "1", "--s-max", "-1", "--step", "0.1"][..],
        &["gap", "--n", "2", "--s-min", "-1", "--s-max", "1", "--step", "0"],
        &["gap", "--n", "0", "--s-min", "-1", "--s-max", "1", "--step", "0.5"],
        &["softedge", "--quantity", "f-airy", "--a", "1.5", "--s-min", "-1", "--s-max", "1", "--step", "0.5"],
    ] {
        let out = run(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

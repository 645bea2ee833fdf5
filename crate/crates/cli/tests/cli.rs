//! End-to-end runs of the `mixvol` binary: reports, exit codes, stderr format.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    root.join(name).display().to_string()
}

fn mixvol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixvol")).args(args).output().expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = mixvol(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn err_line(out: &Output) -> Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "stderr: {text}");
    serde_json::from_str(text.trim_end()).expect("stderr is JSON")
}

fn without_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings");
    v
}

#[test]
fn exact_square_triangle_normalizations() {
    let r = json_ok(&["exact", &fixture("square-triangle.json"), "--alpha", "1,1"]);
    assert_eq!(r["coefficient"], "2");
    assert_eq!(r["derivative_form"], "2");
    assert_eq!(r["standard_mixed_volume"], "1");
    assert_eq!(r["volume_at_ones"], "7/2");
}

#[test]
fn exact_cube_and_flat_summand() {
    let r = json_ok(&["exact", &fixture("cube.json"), "--alpha", "3"]);
    assert_eq!((r["coefficient"].as_str(), r["derivative_form"].as_str()), (Some("1"), Some("6")));
    assert_eq!(r["standard_mixed_volume"], "1");
    let r = json_ok(&["exact", &fixture("segments.json"), "--alpha", "2,0"]);
    assert_eq!(r["coefficient"], "0");
    let r = json_ok(&["exact", &fixture("segments.json"), "--alpha", "0,2"]);
    assert_eq!(r["coefficient"], "0");
}

#[test]
fn exact_without_alpha_lists_everything() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noalpha.json");
    let mut inst: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("square-triangle.json")).unwrap()).unwrap();
    inst.as_object_mut().unwrap().remove("alpha");
    std::fs::write(&path, inst.to_string()).unwrap();
    let r = json_ok(&["exact", path.to_str().unwrap()]);
    assert_eq!(r["normalizations"].as_array().unwrap().len(), 3);
}

#[test]
fn capacity_and_bounds() {
    let r = json_ok(&["capacity", &fixture("square-triangle.json")]);
    assert!((r["cap_value"].as_f64().unwrap() - (2.0 + 2f64.sqrt())).abs() < 1e-6);
    let b = json_ok(&["bounds", &fixture("square-triangle.json"), "--alpha", "1,1"]);
    assert_eq!((b["A"].as_str(), b["A_tilde"].as_str()), (Some("4"), Some("4")));
    assert_eq!(b["blp_pass"], true);
    assert_eq!(b["gurvits"]["pass"], true);
    let s = json_ok(&["bounds", &fixture("segments.json")]);
    assert_eq!(s["A"], "1");
    assert!((s["cap_value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let c = json_ok(&["bounds", &fixture("cube.json")]);
    assert_eq!(c["A"], "1");
    assert!(c["gurvits"].is_null());
}

#[test]
fn estimate_segments_is_exactly_one() {
    let r = json_ok(&["estimate", &fixture("segments.json"), "--alpha", "1,1", "--samples", "300"]);
    assert_eq!(r["estimate_coefficient"], "1");
    assert_eq!(r["p_hat"], "1");
    assert_eq!(r["N"], r["T"]);
}

#[test]
fn estimate_square_triangle_seed_42() {
    let r = json_ok(&[
        "estimate", &fixture("square-triangle.json"), "--alpha", "1,1", "--eps", "0.1",
        "--delta", "0.05", "--seed", "42",
    ]);
    let e = r["estimate_coefficient_f64"].as_f64().unwrap();
    assert!((1.8..=2.2).contains(&e), "{e}");
    assert_eq!(r["N"], 14294);
    assert_eq!(r["seed"], 42);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn estimate_is_reproducible_and_records_workers() {
    let args = ["estimate", &fixture("square-triangle.json"), "--samples", "300", "--seed", "5"];
    let a = without_timings(json_ok(&args));
    let b = without_timings(json_ok(&args));
    assert_eq!(a, b);
    let out = Command::new(env!("CARGO_BIN_EXE_mixvol"))
        .args(args)
        .env("MIXVOL_THREADS", "2")
        .output()
        .unwrap();
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["workers"], 2);
    assert_eq!(r["config"]["threads"], 2);
    assert_eq!(r["estimate_coefficient"], a["estimate_coefficient"]);
}

#[test]
fn degenerate_instance_returns_zero_with_warning() {
    let r = json_ok(&["estimate", &fixture("collinear.json")]);
    assert_eq!(r["estimate_coefficient"], "0");
    assert!(!r["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn validation_failures_exit_two_with_json() {
    let out = mixvol(&["estimate", &fixture("square-triangle.json"), "--alpha", "2,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(err_line(&out)["exit_code"], 2);

    let out = mixvol(&["subdivide", &fixture("cube.json"), "--svg", "/nonexistent/x.svg"]);
    assert_eq!(out.status.code(), Some(2));
    err_line(&out);

    let out = mixvol(&["exact", "/does/not/exist.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(err_line(&out)["error"], "io");

    let out = mixvol(&["estimate", &fixture("square-triangle.json"), "--eps", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(err_line(&out)["error"], "usage");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 2, "L": 0, "polytopes": [{"name": "p", "vertices": [[0, 3]]}]}"#).unwrap();
    let out = mixvol(&["exact", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    err_line(&out);
}

#[test]
fn numerical_failures_map_to_exit_three() {
    use mixvol::Error;
    use mixvol_cli::CliError;
    for e in [
        Error::NonGenericShifts,
        Error::Lp("x".into()),
        Error::Inconsistency("x".into()),
        Error::NoConvergence { iterations: 1, gap: 1.0, best_y: vec![0.0], best_value: 0.0 },
        Error::SamplerStalled { trials: 1, rate: 0.0 },
    ] {
        let c = CliError::from(e);
        assert_eq!(c.exit_code(), 3);
        let line: Value = serde_json::from_str(&c.to_json_line()).unwrap();
        assert_eq!(line["exit_code"], 3);
    }
    assert_eq!(CliError::from(Error::InvalidInput("x".into())).exit_code(), 2);
    assert_eq!(CliError::from(Error::TooManyTuples { count: 2, cap: 1 }).exit_code(), 2);
}

#[test]
fn subdivide_square_triangle_with_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("fig1.svg");
    let r = json_ok(&[
        "subdivide", &fixture("square-triangle.json"), "--lambda", "1,1", "--svg",
        svg.to_str().unwrap(), "--seed", "3",
    ]);
    let sums: Vec<(Value, Value)> = r["signature_sums"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| (s["signature"].clone(), s["volume"].clone()))
        .collect();
    assert_eq!(
        sums,
        vec![
            (serde_json::json!([0, 2]), Value::from("1/2")),
            (serde_json::json!([1, 1]), Value::from("2")),
            (serde_json::json!([2, 0]), Value::from("1")),
        ]
    );
    assert_eq!(r["verification"]["pass"], true);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    assert!(text.contains("square") && text.contains("triangle"));
}

#[test]
fn subdivide_segments_single_mixed_cell() {
    let r = json_ok(&["subdivide", &fixture("segments.json")]);
    assert_eq!(r["cell_count"], 1);
    assert_eq!(r["cells"][0]["signature"], serde_json::json!([1, 1]));
}

#[test]
fn gen_is_deterministic_and_loads_everywhere() {
    let a = mixvol(&["gen", "--n", "2", "--k", "2", "--m0", "5", "--L", "3", "--seed", "7"]);
    let b = mixvol(&["gen", "--n", "2", "--k", "2", "--m0", "5", "--L", "3", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.json");
    let out = mixvol(&[
        "gen", "--n", "3", "--k", "3", "--m0", "4", "--L", "2", "--seed", "1", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let p = path.to_str().unwrap();
    let exact = json_ok(&["exact", p]);
    assert_eq!(exact["normalizations"].as_array().unwrap().len(), 10);
    json_ok(&["capacity", p, "--alpha", "1,1,1"]);
    json_ok(&["bounds", p, "--alpha", "1,1,1"]);
    json_ok(&["subdivide", p, "--audit-points", "100"]);
    json_ok(&["estimate", p, "--alpha", "1,1,1", "--samples", "50"]);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SKEW: &str =
    r#"{"generators":[{"name":"alpha"}],"matrix":[[1,0],[2,1]],"translation":["alpha","alpha"]}"#;

fn ergolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergolab"))
        .args(args)
        .env_remove("ERGOLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn independence_check() {
    let v = json(&ergolab(&["independence-check", "--polys", "n,n^2"]));
    assert_eq!(v["independent"], Value::Bool(true));
    let v = json(&ergolab(&[
        "independence-check",
        "--polys",
        "2n^2+4n, -n^2-2n+7, n^3",
    ]));
    assert_eq!(v["independent"], Value::Bool(false));
    assert_eq!(v["witness"], serde_json::json!([1, 2, 0]));
    assert_eq!(v["config"]["command"]["polys"], "2n^2+4n, -n^2-2n+7, n^3");
}

#[test]
fn reduce_emits_a_verified_reduction() {
    let dir = TempDir::new().unwrap();
    let a = file(&dir, "a.json", "[[1,0],[2,1]]");
    let v = json(&ergolab(&["reduce", "--matrix", s(&a)]));
    assert_eq!(v["block_sizes"], serde_json::json!([2]));
    assert_eq!(v["J"], serde_json::json!([["1", "0"], ["1", "1"]]));
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let not_unipotent = file(&dir, "b.json", "[[2,0],[0,1]]");
    let out = ergolab(&["reduce", "--matrix", s(&not_unipotent)]);
    assert_eq!(out.status.code(), Some(2));

    let bad_entry = file(&dir, "c.json", r#"[[1,"x"],[0,1]]"#);
    let out = ergolab(&["reduce", "--matrix", s(&bad_entry)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("matrix"));

    let sys = file(&dir, "sys.json", SKEW);
    let out = ergolab(&[
        "weyl-sum",
        "--system",
        s(&sys),
        "--polys",
        "n",
        "--freq",
        "1,0,0",
        "--N",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let unknown = file(&dir, "u.json", r#"{"matrix":[[1]],"translation":["beta"]}"#);
    let out = ergolab(&[
        "weyl-sum",
        "--system",
        s(&unknown),
        "--polys",
        "n",
        "--freq",
        "1",
        "--N",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta"));

    assert_eq!(
        ergolab(&["independence-check", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(
        ergolab(&["independence-check", "--polys", "n^"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ergolab(&["--threads", "0", "independence-check", "--polys", "n"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn seeds_are_mandatory_for_stochastic_modes() {
    let dir = TempDir::new().unwrap();
    let sys = file(&dir, "sys.json", SKEW);
    let fs = file(
        &dir,
        "f.json",
        r#"{"functions":[{"terms":[{"freq":[0,1],"re":1}]},{"terms":[{"freq":[1,1],"re":1}]}]}"#,
    );
    let out = ergolab(&[
        "discrepancy",
        "--system",
        s(&sys),
        "--N",
        "100",
        "--mode",
        "random",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    let out = ergolab(&[
        "average",
        "--system",
        s(&sys),
        "--polys",
        "n,n^2",
        "--functions",
        s(&fs),
        "--N",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // dependent families are rejected before any computation
    let out = ergolab(&[
        "average",
        "--system",
        s(&sys),
        "--polys",
        "n,2n",
        "--functions",
        s(&fs),
        "--N",
        "100",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn counterexample_phase_has_unit_magnitude() {
    let dir = TempDir::new().unwrap();
    let sys = file(&dir, "sys.json", SKEW);
    let origin = file(&dir, "x.json", r#"{"coords":["0","0"]}"#);
    let v = json(&ergolab(&[
        "weyl-sum",
        "--system",
        s(&sys),
        "--point",
        s(&origin),
        "--polys",
        "n,n^2",
        "--freq",
        "0,1,-1,0",
        "--N",
        "5000",
    ]));
    assert_eq!(v["magnitude"].as_f64(), Some(1.0));
    assert_eq!(v["N"], 5000);

    let v = json(&ergolab(&["demo-counterexample", "--N", "3000"]));
    assert_eq!(v["origin"]["magnitude"].as_f64(), Some(1.0));
    assert_eq!(v["generic"]["frequencies"].as_array().unwrap().len(), 624);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let sys = file(&dir, "sys.json", SKEW);
    let fs = file(
        &dir,
        "f.json",
        r#"{"functions":[{"terms":[{"freq":[0,1],"re":1}]},{"terms":[{"freq":[1,1],"re":1},{"freq":[0,0],"re":0.5}]}]}"#,
    );
    let args = [
        "average",
        "--system",
        s(&sys),
        "--polys",
        "n,n^2",
        "--functions",
        s(&fs),
        "--N",
        "3000",
        "--samples",
        "4",
        "--seed",
        "7",
    ];
    let a = ergolab(&args);
    let b = ergolab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["values"].as_array().unwrap().len(), 4);

    let weyl = [
        "weyl-sum",
        "--system",
        s(&sys),
        "--polys",
        "n,n^2",
        "--freq",
        "1,2,0,-1",
        "--N",
        "200000",
    ];
    let one = ergolab(&[&["--threads", "1"], &weyl[..]].concat());
    let three = ergolab(&[&["--threads", "3"], &weyl[..]].concat());
    let strip = |o: &Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("config");
        v
    };
    assert_eq!(strip(&one), strip(&three));
}

#[test]
fn threads_fall_back_to_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_ergolab"))
        .args(["independence-check", "--polys", "n"])
        .env("ERGOLAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["threads"], 2);
}

#[test]
fn orbit_and_nil_demo_write_csv() {
    let dir = TempDir::new().unwrap();
    let sys = file(&dir, "sys.json", SKEW);
    let origin = file(&dir, "x.json", r#"{"coords":["0","0"]}"#);
    let csv = dir.path().join("orbit.csv");
    let out = ergolab(&[
        "orbit",
        "--system",
        s(&sys),
        "--point",
        s(&origin),
        "--N",
        "4",
        "--out",
        s(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], "0,0.0000000000000000e0,0.0000000000000000e0");

    let nil_csv = dir.path().join("nil.csv");
    let v = json(&ergolab(&[
        "demo-nil",
        "--example",
        "2",
        "--a",
        "1,alpha,beta,gamma",
        "--steps",
        "10",
        "--csv",
        s(&nil_csv),
    ]));
    assert_eq!(
        v["map"]["matrix"],
        serde_json::json!([["1", "0", "0"], ["1", "1", "0"], ["1", "2", "1"]])
    );
    assert_eq!(v["ergodic"], Value::Bool(true));
    assert_eq!(
        std::fs::read_to_string(&nil_csv).unwrap().lines().count(),
        11
    );

    let v = json(&ergolab(&[
        "demo-nil",
        "--example",
        "1",
        "--a",
        "2,1/2,alpha",
    ]));
    assert_eq!(v["ergodic"], Value::Bool(false));
    assert_eq!(
        ergolab(&["demo-nil", "--example", "3", "--a", "1,0,0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn discrepancy_reports_a_lower_bound() {
    let dir = TempDir::new().unwrap();
    let sys = file(
        &dir,
        "rot.json",
        r#"{"generators":[{"name":"alpha"}],"matrix":[[1]],"translation":["alpha"]}"#,
    );
    let v = json(&ergolab(&[
        "discrepancy",
        "--system",
        s(&sys),
        "--N",
        "2000",
        "--mode",
        "random",
        "--trials",
        "200",
        "--seed",
        "3",
    ]));
    let est = v["estimate"].as_f64().unwrap();
    assert!(est > 0.0 && est < 0.02, "{est}");
    assert_eq!(v["seed"], 3);
    assert_eq!(v["mode"], "random");
}

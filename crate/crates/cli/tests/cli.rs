use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

const TRIANGLE: &str = r#"{"matroid":{"type":"graphic","vertices":3,"edges":[[0,1],[1,2],[0,2]]},"bases":[[0,1],[1,2]]}"#;

fn rbases(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbases"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_solve_verify_pipeline() {
    let dir = tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let dec = dir.path().join("dec.json");
    let trace = dir.path().join("trace.jsonl");
    let out = rbases(&[
        "gen",
        "--kind",
        "linear-random(5)",
        "--n",
        "8",
        "--seed",
        "3",
        "--out",
        path(&inst),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = rbases(&[
        "solve",
        path(&inst),
        "--out",
        path(&dec),
        "--trace",
        path(&trace),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = rbases(&["verify", path(&dec)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok:"));
    for line in fs::read_to_string(&trace).unwrap().lines() {
        serde_json::from_str::<serde_json::Value>(line).expect("trace lines are JSON");
    }
}

#[test]
fn triangle_packs_one_basis() {
    let dir = tempdir().unwrap();
    let inst = dir.path().join("t.json");
    fs::write(&inst, TRIANGLE).unwrap();
    let out = rbases(&["solve", path(&inst), "--f", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["k"], 1);
}

#[test]
fn solve_output_is_reproducible() {
    let dir = tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    assert!(rbases(&[
        "gen",
        "--kind",
        "graphic-random",
        "--n",
        "6",
        "--seed",
        "1",
        "--out",
        path(&inst)
    ])
    .status
    .success());
    let a = rbases(&["solve", path(&inst), "--seed", "4"]).stdout;
    let b = rbases(&["solve", path(&inst), "--seed", "4"]).stdout;
    assert_eq!(a, b);
}

#[test]
fn selftest_is_deterministic_and_clean() {
    let args = ["selftest", "--n", "4", "--trials", "20", "--seed", "7"];
    let a = rbases(&args);
    let b = rbases(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempdir().unwrap();
    let inst = dir.path().join("bad.json");
    fs::write(&inst, "{not json").unwrap();
    assert_eq!(rbases(&["solve", path(&inst)]).status.code(), Some(2));
    assert_eq!(
        rbases(&["gen", "--kind", "nonsense", "--n", "3"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn repeated_colour_in_a_member_is_an_input_error() {
    let dir = tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let dec = dir.path().join("dec.json");
    assert!(rbases(&[
        "gen",
        "--kind",
        "uniform-identical",
        "--n",
        "4",
        "--out",
        path(&inst)
    ])
    .status
    .success());
    assert!(rbases(&["solve", path(&inst), "--out", path(&dec)])
        .status
        .success());
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&dec).unwrap()).unwrap();
    v["complete"][0][1] = v["complete"][0][0].clone();
    fs::write(&dec, serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(rbases(&["verify", path(&dec)]).status.code(), Some(2));
}

#[test]
fn corrupted_decomposition_exits_1() {
    let dir = tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let dec = dir.path().join("dec.json");
    assert!(rbases(&[
        "gen",
        "--kind",
        "uniform-identical",
        "--n",
        "6",
        "--out",
        path(&inst)
    ])
    .status
    .success());
    assert!(rbases(&["solve", path(&inst), "--out", path(&dec)])
        .status
        .success());
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&dec).unwrap()).unwrap();
    assert!(v["complete"].as_array().unwrap().len() >= 2);
    // two members now share every pair
    v["complete"][1] = v["complete"][0].clone();
    fs::write(&dec, serde_json::to_string(&v).unwrap()).unwrap();
    let out = rbases(&["verify", path(&dec)]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn oracle_exact_reports_optimum() {
    let dir = tempdir().unwrap();
    let inst = dir.path().join("t.json");
    fs::write(&inst, TRIANGLE).unwrap();
    let out = rbases(&["oracle", "exact", path(&inst)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains('1'));
}

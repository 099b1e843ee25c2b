use std::process::{Command, Output};

use serde_json::Value;

fn walg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walg")).args(args).env_remove("WALG_MAX_N").output().expect("binary runs")
}

fn walg_json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let out = walg(&all);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{args:?}: not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    });
    (out.status.code().expect("exit code"), v)
}

fn schema() -> jsonschema::JSONSchema {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/report.schema.json");
    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).expect("schema file")).expect("schema parses");
    jsonschema::JSONSchema::compile(&s).expect("schema compiles")
}

fn assert_valid(v: &Value) {
    let sch = schema();
    let msgs: Vec<String> = match sch.validate(v) {
        Ok(()) => Vec::new(),
        Err(errs) => errs.map(|e| format!("{e} at {}", e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "report violates schema: {msgs:?}");
}

#[test]
fn seven_box_pyramid_json() {
    let (code, v) = walg_json(&["pyramid", "--columns", "1,3,2,1"]);
    assert_eq!(code, 0);
    assert_valid(&v);
    let d = &v["data"];
    assert_eq!(d["rows"], serde_json::json!([1, 2, 4]));
    assert_eq!(d["N"], 7);
    assert_eq!(d["pi1"], serde_json::json!([1, 4, 6]));
    assert_eq!(d["pi0"], serde_json::json!([2, 3, 5]));
    assert_eq!(d["degrees"], serde_json::json!([1, 0, 0, 1, 0, 1]));
    assert_eq!(d["nilpotent"], serde_json::json!(["e[4,1]", "e[5,3]", "e[6,4]", "e[7,6]"]));
    assert_eq!(d["boxes"][3], serde_json::json!({"box": 4, "row": 3, "col": 2}));
}

#[test]
fn binomial_smallest_case_passes() {
    let (code, v) = walg_json(&["binom", "--n", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "pass");
    assert_valid(&v);
}

#[test]
fn gl2_screening_kills_both_generators() {
    let (code, v) = walg_json(&["screen", "--columns", "1,1"]);
    assert_eq!(code, 0);
    assert_valid(&v);
    let targets: Vec<&str> = v["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["check"] == "fock.screening_kernel" && r["status"] == "pass")
        .map(|r| r["inputs"]["target"].as_str().unwrap())
        .collect();
    assert_eq!(targets, vec!["W1", "W2"]);
    let human = String::from_utf8(walg(&["screen", "--columns", "1,1", "--target", "W2"]).stdout).unwrap();
    assert!(human.contains("PASS fock.screening_kernel"), "{human}");
    assert!(!human.contains("W1"), "{human}");
}

#[test]
fn reports_are_byte_identical() {
    for args in [
        &["pyramid", "--columns", "1,3,2,1", "--json"][..],
        &["coproduct", "--columns", "1,1,1", "--after", "1", "--check", "factorization", "--json"],
        &["miura", "--mode", "subregular", "--N", "3", "--n1", "2", "--json"],
    ] {
        let a = walg(args).stdout;
        let b = walg(args).stdout;
        assert!(!a.is_empty());
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn every_command_validates() {
    let cases: &[&[&str]] = &[
        &["split", "--columns", "1,3,2,1", "--after", "2"],
        &["wakimoto", "--N", "2", "--columns", "1,1", "--check", "all"],
        &["miura", "--mode", "principal", "--N", "3"],
        &["miura", "--mode", "rectangular", "--N", "4", "--height", "2", "--width", "2"],
        &["coproduct", "--columns", "1,1,1", "--after", "1", "--after2", "2", "--check", "coassoc"],
        &["coproduct", "--columns", "1,1,1", "--after", "2", "--check", "compat"],
        &["verify-all", "--only", "8,9"],
    ];
    for args in cases {
        let (code, v) = walg_json(args);
        assert_eq!(code, 0, "{args:?}");
        assert_eq!(v["status"], "pass", "{args:?}");
        assert_valid(&v);
    }
}

#[test]
fn literal_subregular_formulas_fail_with_exit_one() {
    let (code, v) = walg_json(&["coproduct", "--columns", "2,1", "--after", "1", "--check", "subregular"]);
    assert_eq!(code, 1);
    assert_eq!(v["status"], "fail");
    assert_valid(&v);
    let rec = |id: &str| v["records"].as_array().unwrap().iter().find(|r| r["check"] == id).cloned().unwrap();
    assert_eq!(rec("coproduct.subregular.trace")["witness"][0], "2*e[3,3]");
    assert_eq!(rec("coproduct.subregular.trace_sign_adjusted")["status"], "pass");
    assert_eq!(rec("coproduct.subregular.lowering")["status"], "pass");
}

#[test]
fn level_specialization() {
    let (code, v) = walg_json(&["miura", "--mode", "principal", "--N", "2", "--level", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["data"]["generators"]["W2"], "1*NO(h[1],h[2]) + 2*D^1(h[2])");
    assert_eq!(v["inputs"]["level"], "1");
    let (_, v) = walg_json(&["split", "--columns", "1,1,1", "--after", "1", "--level", "-1/2"]);
    assert_eq!(v["data"]["levels"], serde_json::json!({"k": "-1/2", "k1": "3/2", "k2": "1/2"}));
    let (_, v) = walg_json(&["wakimoto", "--N", "2", "--columns", "1,1", "--check", "lift", "--level", "-1"]);
    let e21 = v["data"]["images"]["e[2,1]"].as_str().unwrap();
    assert!(e21.ends_with("(-1)*D^1(as[1,2])"), "{e21}");
    // an exact cancellation drops the term
    let (_, v) = walg_json(&["miura", "--mode", "principal", "--N", "2", "--level", "-1"]);
    assert_eq!(v["data"]["generators"]["W2"], "1*NO(h[1],h[2])");
}

#[test]
fn usage_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["pyramid", "--columns", "1,3,1,2"],
        &["pyramid", "--columns", "a,b"],
        &["split", "--columns", "1,1", "--after", "2"],
        &["wakimoto", "--N", "3", "--columns", "1,1"],
        &["miura", "--mode", "rectangular", "--N", "4", "--height", "2"],
        &["miura", "--mode", "subregular", "--N", "3", "--n1", "5"],
        &["screen", "--columns", "1,1", "--target", "W9"],
        &["coproduct", "--columns", "1,1,1", "--after", "1", "--check", "coassoc"],
        &["coproduct", "--columns", "1,1,1", "--after", "1", "--check", "subregular"],
        &["binom", "--n", "0"],
        &["binom", "--n", "2", "--level", "two"],
        &["verify-all", "--only", "10"],
        &["verify-all", "--only", "9", "--level", "-2"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = walg(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn size_bound_from_environment() {
    let run = |bound: &str| {
        Command::new(env!("CARGO_BIN_EXE_walg"))
            .args(["miura", "--mode", "principal", "--N", "3"])
            .env("WALG_MAX_N", bound)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("2"), Some(2));
    assert_eq!(run("3"), Some(0));
    assert_eq!(run("many"), Some(2));
    // pure combinatorics is not bounded
    let out = Command::new(env!("CARGO_BIN_EXE_walg"))
        .args(["pyramid", "--columns", "1,3,2,1"])
        .env("WALG_MAX_N", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

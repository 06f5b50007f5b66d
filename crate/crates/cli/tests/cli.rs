use std::process::Command;

use serde_json::Value;

fn run_json(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["mpfp"];
    full.extend_from_slice(args);
    full.push("--json");
    let out = mpfp_cli::run(full);
    let v: Value = serde_json::from_str(&out.stdout).unwrap_or(Value::Null);
    (out.code, v)
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("mpfp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn mutual_info_example() {
    let (code, v) = run_json(&["mutual-info", "examples/zcl-no-sal", "--p", "0.25", "--n", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], 1);
    let i = v["report"]["mutual_info"].as_array().unwrap();
    assert!((i[0].as_f64().unwrap() - 3.0963).abs() < 5e-4);
    assert!((i[1].as_f64().unwrap() - 3.1250).abs() < 5e-4);
    assert_eq!(v["report"]["sal"], false);
}

#[test]
fn rfp_pure_ghz() {
    let (code, v) = run_json(&["rfp-pure", "examples/ghz"]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["rfp"]["value"], true);
    assert!(v["report"]["rfp"]["residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn toric_algebra_table() {
    let (code, v) = run_json(&["algebra", "examples/toric-boundary", "--lmax", "5"]);
    assert_eq!(code, 0);
    let r = &v["report"];
    assert_eq!(r["l_independent"], true);
    assert_eq!(r["labels"], 2);
    for level in r["levels"].as_array().unwrap() {
        for row in level["coefficients"].as_array().unwrap() {
            let cs: Vec<f64> = row["c"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            assert!(cs.iter().all(|x| x.abs() < 1e-9 || (x - 1.0).abs() < 1e-9));
            assert!((cs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn negative_verdicts_exit_zero() {
    let (code, v) = run_json(&["rfp-mpdo", "aklt"]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["rfp"], false);
    let (code, v) = run_json(&["gsnnch", "toric-boundary"]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["applicable"], false);
}

#[test]
fn json_is_deterministic() {
    for args in [
        vec!["gsnnch", "max-mixed", "--seed", "3"],
        vec!["decompose", "toric-boundary", "--n", "4"],
        vec!["canon", "aklt"],
    ] {
        let mut full = vec!["mpfp"];
        full.extend(args.iter().copied());
        full.push("--json");
        let a = mpfp_cli::run(full.clone()).stdout;
        let b = mpfp_cli::run(full).stdout;
        assert_eq!(a, b);
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(mpfp_cli::run(["mpfp", "no-such-command"]).code, 1);
    assert_eq!(mpfp_cli::run(["mpfp", "zcl"]).code, 1);
    assert_eq!(mpfp_cli::run(["mpfp", "rfp-pure", "no/such/file"]).code, 1);
    assert_eq!(mpfp_cli::run(["mpfp", "rfp-pure", "toric-boundary"]).code, 1);
}

#[test]
fn example_file_round_trip() {
    let out = mpfp_cli::run(["mpfp", "example", "toric-boundary"]);
    assert_eq!(out.code, 0);
    let path = tmp("toric.tensor");
    std::fs::write(&path, &out.stdout).unwrap();
    let (code, v) = run_json(&["zcl", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["zcl"]["value"], true);
    assert!((v["report"]["lambda"]["re"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn binary_reports_parse_position() {
    let text = mpfp_cli::run(["mpfp", "example", "ghz"]).stdout;
    let short: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
    let path = tmp("short.tensor");
    std::fs::write(&path, short).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mpfp")).args(["rfp-pure", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("expected 8 entries, found 7"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn fib_rank_command() {
    let (code, v) = run_json(&["fib-rank", "--n", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["closed_form"], serde_json::json!([3, 7, 18, 47]));
    assert_eq!(v["report"]["brute_force"], serde_json::json!([3, 7, 18, 47]));
    assert!(v["report"]["geometric_fit"].is_null());
}

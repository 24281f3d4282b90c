use std::process::{Command, Output};

fn qcyamabe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcyamabe")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn without_seconds(mut doc: serde_json::Value) -> serde_json::Value {
    for r in doc["reports"].as_array_mut().unwrap() {
        r.as_object_mut().unwrap().remove("seconds");
    }
    doc
}

#[test]
fn passing_suite_exits_zero_with_schema() {
    let out = qcyamabe(&["qmatrix", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["suite"], "qmatrix");
    assert_eq!(doc["seed"], 0);
    for r in doc["reports"].as_array().unwrap() {
        for key in ["check", "samples", "max_residual", "tolerance", "pass", "provenance", "seconds"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn failing_report_exits_one() {
    let out = qcyamabe(&["verify-frames", "--tol", "1e-300", "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["reports"].as_array().unwrap().iter().any(|r| r["pass"] == false));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(qcyamabe(&["verify-spheres"]).status.code(), Some(2));
    assert_eq!(qcyamabe(&["qmatrix", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(qcyamabe(&["qmatrix", "--seed", "minus-one"]).status.code(), Some(2));
    assert_eq!(qcyamabe(&["qmatrix", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(qcyamabe(&["qmatrix", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(qcyamabe(&[]).status.code(), Some(2));
}

#[test]
fn same_seed_same_reports() {
    let args = ["verify-extremal", "--seed", "42", "--samples", "200", "--format", "json"];
    let a = qcyamabe(&args);
    let b = qcyamabe(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(without_seconds(json(&a)), without_seconds(json(&b)));
}

#[test]
fn samples_flag_reaches_reports() {
    let doc = json(&qcyamabe(&["verify-cayley", "--samples", "11", "--format", "json"]));
    assert!(doc["reports"].as_array().unwrap().iter().all(|r| r["samples"] == 11));
}

#[test]
fn out_and_convergence_files_are_written() {
    let dir = std::env::temp_dir().join(format!("qcyamabe-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let report = dir.join("report.csv");
    let table = dir.join("convergence.csv");
    let out = qcyamabe(&[
        "best-constant",
        "--format",
        "csv",
        "--out",
        report.to_str().unwrap(),
        "--convergence-csv",
        table.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let report = std::fs::read_to_string(&report).unwrap();
    assert!(report.starts_with("suite,seed,check,"));
    assert!(report.lines().skip(1).all(|l| l.starts_with("quadrature,0,")));
    let table = std::fs::read_to_string(&table).unwrap();
    assert!(table.starts_with("level,estimate,error,cells"));
    assert!(table.lines().count() > 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn text_output_lists_every_check() {
    let out = qcyamabe(&["verify-conformal", "--samples", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(text.contains("0 failed"));
}

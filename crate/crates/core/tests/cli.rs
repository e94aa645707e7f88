use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use retrodiction::report::ReportDocument;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retrodiction")).args(args).output().unwrap()
}

fn json_report(args: &[&str]) -> ReportDocument {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = cli(&full);
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn identity_predict_prints_a_delta() {
    let path = fixture("identity-predict.json");
    let r = json_report(&["--scenario", path.to_str().unwrap(), "run"]);
    assert_eq!(r.command, "predict");
    assert_eq!(r.tables[0].probabilities(), [0.0, 1.0]);
    assert!(r.scenario_digest.as_ref().is_some_and(|d| d.len() == 64));
}

#[test]
fn damping_postdiction_table() {
    let path = fixture("amplitude-damping-postdict.json");
    let r = json_report(&["--scenario", path.to_str().unwrap(), "postdict"]);
    let t = &r.tables[0];
    assert!((t.at(0) - 2.0 / 3.0).abs() < 1e-12);
    assert!((t.at(1) - 1.0 / 3.0).abs() < 1e-12);
    assert!((t.factor.unwrap() - 2.0 / 3.0).abs() < 1e-12);

    let r = json_report(&["--scenario", path.to_str().unwrap(), "postdict", "--given", "1"]);
    assert_eq!(r.tables[0].probabilities(), [0.0, 1.0]);
}

#[test]
fn csv_output() {
    let path = fixture("amplitude-damping-postdict.json");
    let out = cli(&["--scenario", path.to_str().unwrap(), "--format", "csv", "run"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("given,outcome,probability"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][..2], ["0", "0"]);
    assert!((rows[0][2].parse::<f64>().unwrap() - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn classify_dephasing() {
    let path = fixture("dephasing-classify.json");
    let out = cli(&["--scenario", path.to_str().unwrap(), "classify"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("unital: true, inference-symmetric: true, active-reverse: exists"), "{text}");
}

#[test]
fn classify_damping() {
    let path = fixture("amplitude-damping-postdict.json");
    let r = json_report(&["--scenario", path.to_str().unwrap(), "classify"]);
    assert_eq!(r.summary[0], "unital: false, inference-symmetric: false, active-reverse: none");
    assert!(r.pass);
}

#[test]
fn hadamard_sampling_passes() {
    let path = fixture("hadamard-sample.json");
    let out = cli(&["--scenario", path.to_str().unwrap(), "sample", "--shots", "100000", "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let first = json_report(&["--scenario", path.to_str().unwrap(), "sample", "--shots", "20000"]);
    let second = json_report(&["--scenario", path.to_str().unwrap(), "sample", "--shots", "20000"]);
    assert_eq!(first, second);
}

#[test]
fn purify_reports_the_dilation() {
    let path = fixture("amplitude-damping-postdict.json");
    let r = json_report(&["--scenario", path.to_str().unwrap(), "purify"]);
    assert!(r.pass);
    assert_eq!(r.data["pointer_dims"], serde_json::Value::Null);
    assert!(r.data["unitary"].is_array());
    assert!(r.checks.iter().any(|c| c.name == "round-trip"));
}

#[test]
fn verify_verdicts_are_reproducible() {
    let a = json_report(&["verify", "--seed", "9", "--dims", "3", "2"]);
    let b = json_report(&["verify", "--seed", "9", "--dims", "3", "2"]);
    assert!(a.pass);
    assert_eq!(a, b);
}

#[test]
fn printed_rows_are_normalized() {
    for name in ["identity-predict.json", "amplitude-damping-postdict.json", "cnot-open-postdict.json", "hadamard-sample.json"] {
        let path = fixture(name);
        let r = json_report(&["--scenario", path.to_str().unwrap(), "run"]);
        assert!(r.probabilities_in_range());
        for t in &r.tables {
            assert!((t.total() - 1.0).abs() < 1e-9, "{name}: {}", t.total());
        }
    }
}

#[test]
fn exit_codes() {
    let non_unitary = fixture("negative/non-unitary.json");
    let out = cli(&["--scenario", non_unitary.to_str().unwrap(), "run"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("transformation.matrix"));

    let impossible = fixture("negative/impossible-outcome.json");
    assert_eq!(cli(&["--scenario", impossible.to_str().unwrap(), "run"]).status.code(), Some(4));

    assert_eq!(cli(&["verify", "--bogus"]).status.code(), Some(2));
    assert_eq!(cli(&["--tolerance", "0", "verify"]).status.code(), Some(5));
}

#[test]
fn malformed_and_unknown_task_are_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let malformed = dir.path().join("malformed.json");
    std::fs::write(&malformed, "{\"task\": ").unwrap();
    let out = cli(&["--scenario", malformed.to_str().unwrap(), "run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("E_MALFORMED"));

    let unknown = dir.path().join("unknown.json");
    let text = std::fs::read_to_string(fixture("identity-predict.json")).unwrap().replace("\"predict\"", "\"teleport\"");
    std::fs::write(&unknown, text).unwrap();
    let out = cli(&["--scenario", unknown.to_str().unwrap(), "run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("E_UNKNOWN_TASK"));
}

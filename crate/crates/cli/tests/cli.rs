use std::path::{Path, PathBuf};
use std::process::Command;

use secintent_cli::{cmd_metrics, cmd_run, cmd_validate, RunManifest, EVENTS_FILE, METRICS_FILE, REPORTS_FILE, SUMMARY_FILE};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn manifest(scenario: &str, intents: &[&str], out: &Path) -> RunManifest {
    RunManifest {
        scenario: root().join("scenarios").join(scenario),
        intents: intents.iter().map(|i| root().join("corpus/intents").join(i)).collect(),
        catalog: root().join("catalog/controls.json"),
        mapping: root().join("config/level_mapping.json"),
        ticks: 200,
        seed: Some(7),
        out: out.to_path_buf(),
    }
}

fn capture(f: impl FnOnce(&mut Vec<u8>) -> i32) -> (i32, String) {
    let mut buf = Vec::new();
    let code = f(&mut buf);
    (code, String::from_utf8(buf).unwrap())
}

fn write_tmp(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_reports_ok_for_corpus_file() {
    let (code, out) = capture(|o| cmd_validate(&[root().join("corpus/intents/useCaseA.ttl")], o));
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("1 intent: OK"), "{out}");
}

#[test]
fn validate_points_at_syntax_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "bad.ttl", "@prefix icm: <https://w3id.example/secintent#> .\n\nicm:x icm:y \"open .\n");
    let (code, out) = capture(|o| cmd_validate(&[p], o));
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("bad.ttl:3:"), "{out}");
}

#[test]
fn validate_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(
        &dir,
        "noscope.ttl",
        r#"@prefix icm: <https://w3id.example/secintent#> .
<https://operator.example/intents/noscope> a icm:Intent ;
    icm:intentKind icm:OperationsIntent ;
    icm:hasExpectation [ a icm:DeliveryExpectation ; icm:expectationId "d" ] .
"#,
    );
    let (code, out) = capture(|o| cmd_validate(&[p], o));
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("scope.nf_types"), "{out}");
}

#[test]
fn metrics_table_and_json_agree() {
    let inv = fixture("metrics_inventory.json");
    let exp = fixture("metrics_expected.json");
    let cat = root().join("catalog/controls.json");
    let (code, table) = capture(|o| cmd_metrics(&inv, &exp, &cat, false, o));
    assert_eq!(code, 0);
    let (code, json) = capture(|o| cmd_metrics(&inv, &exp, &cat, true, o));
    assert_eq!(code, 0);
    assert!(table.lines().any(|l| l.starts_with("gnb-x1") && l.contains("0.5000")), "{table}");
    assert!(table.lines().any(|l| l.starts_with("gnb-x2") && l.ends_with("1.0000")), "{table}");

    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for row in v["nfs"].as_array().unwrap() {
        let nf = row["nf"].as_str().unwrap();
        let line = table.lines().find(|l| l.starts_with(nf)).unwrap();
        let cols: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(format!("{:.4}", row["as_cv"].as_f64().unwrap()), cols[1]);
        assert_eq!(format!("{:.4}", row["sc_cv"].as_f64().unwrap()), cols[2]);
    }
    // Four decimals are kept in the raw JSON text.
    assert!(json.contains("\"as_cv\":0.5000"), "{json}");
}

#[test]
fn metrics_rejects_unknown_nf() {
    let dir = tempfile::tempdir().unwrap();
    let exp = write_tmp(&dir, "e.json", r#"{"expected": [{"nf": "ghost", "controls": []}]}"#);
    let (code, out) =
        capture(|o| cmd_metrics(&fixture("metrics_inventory.json"), &exp, &root().join("catalog/controls.json"), false, o));
    assert_eq!(code, 2, "{out}");
}

#[test]
fn run_writes_the_output_layout() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = capture(|o| cmd_run(&manifest("usecase_ab", &["useCaseA.ttl", "useCaseB.ttl"], dir.path()), o));
    assert_eq!(code, 0, "{out}");
    for f in [REPORTS_FILE, EVENTS_FILE, METRICS_FILE] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert!(!text.is_empty(), "{f}");
        for line in text.lines() {
            serde_json::from_str::<serde_json::Value>(line).unwrap();
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary["all_satisfied"], true);
    assert_eq!(summary["ticks"], 200);
    assert_eq!(summary["final_inventory"].as_array().unwrap().len(), 6);
}

#[test]
fn infeasible_run_names_the_degraded_intent() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = capture(|o| cmd_run(&manifest("infeasible", &["tightLatency.ttl"], dir.path()), o));
    assert_eq!(code, 3, "{out}");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    let unsatisfied = summary["unsatisfied"].as_array().unwrap();
    assert_eq!(unsatisfied.len(), 1);
    let id = unsatisfied[0].as_str().unwrap();
    let intent = summary["intents"].as_array().unwrap().iter().find(|i| i["intent"] == id).unwrap();
    assert_eq!(intent["state"], "degraded");
    assert!(intent["unresolved"][0].as_str().unwrap().contains("latency_ms_added"));
}

#[test]
fn run_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manifest("usecase_ab", &["useCaseA.ttl"], dir.path());
    m.catalog = root().join("catalog/missing.json");
    assert_eq!(capture(|o| cmd_run(&m, o)).0, 2);
    let mut m = manifest("usecase_ab", &["useCaseA.ttl"], dir.path());
    m.ticks = 0;
    assert_eq!(capture(|o| cmd_run(&m, o)).0, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_secintent");
    let status = Command::new(bin).current_dir(root()).args(["validate", "corpus/intents/useCaseB.ttl"]).output().unwrap().status;
    assert_eq!(status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin)
        .current_dir(root())
        .args(["run", "--scenario", "scenarios/usecase_ab", "--intents", "useCaseA.ttl", "useCaseB.ttl"])
        .args(["--ticks", "50", "--seed", "7", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));

    let out = Command::new(bin)
        .current_dir(root())
        .args(["metrics", "--json", "scenarios/usecase_ab/inventory.json", "missing.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

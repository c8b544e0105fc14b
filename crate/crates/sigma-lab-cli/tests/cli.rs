//! End-to-end command tests through the library entry point, exercising the
//! document formats and the exit-code contract.

use std::fs;
use std::path::{Path, PathBuf};

use sigma_lab_cli::run;

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn uniform4_docs(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let space = write(
        dir,
        "space.json",
        r#"{"outcomes":[
            {"id":"w1","mass":"1/4"},{"id":"w2","mass":"1/4"},
            {"id":"w3","mass":"1/4"},{"id":"w4","mass":"1/4"}
        ]}"#,
    );
    let a = write(
        dir,
        "a.json",
        r#"{"space":"space.json","atoms":[["w1","w2"],["w3","w4"]]}"#,
    );
    let b = write(
        dir,
        "b.json",
        r#"{"space":"space.json","atoms":[["w1","w3"],["w2","w4"]]}"#,
    );
    (space, a, b)
}

fn args(parts: &[&str]) -> Vec<String> {
    std::iter::once("sigma-lab".to_string())
        .chain(parts.iter().map(|s| s.to_string()))
        .collect()
}

#[test]
fn metric_of_identical_partitions_is_zero_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (space, a, _) = uniform4_docs(dir.path());
    let out = dir.path().join("report.json");
    let code = run(args(&[
        "metric",
        "--space",
        space.to_str().unwrap(),
        "--a",
        a.to_str().unwrap(),
        "--b",
        a.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out).unwrap()).unwrap();
    assert_eq!(report["report"]["d"], "0/1");
    assert_eq!(report["report"]["exact"], true);
    assert!(report["inputs"][0]["digest"].as_str().unwrap().len() == 32);
}

#[test]
fn metric_crossed_pair_values() {
    let dir = tempfile::tempdir().unwrap();
    let (space, a, b) = uniform4_docs(dir.path());
    let out = dir.path().join("report.json");
    let code = run(args(&[
        "metric",
        "--space",
        space.to_str().unwrap(),
        "--a",
        a.to_str().unwrap(),
        "--b",
        b.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out).unwrap()).unwrap();
    assert_eq!(report["report"]["rho_ab"], "1/2");
    assert_eq!(report["report"]["d"], "1/1");
    assert_eq!(report["report"]["delta"], "1/2");
}

#[test]
fn opnorm_rejects_q_above_p_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (space, a, b) = uniform4_docs(dir.path());
    let code = run(args(&[
        "opnorm",
        "--space",
        space.to_str().unwrap(),
        "--a",
        a.to_str().unwrap(),
        "--b",
        b.to_str().unwrap(),
        "--p",
        "1",
        "--q",
        "2",
    ]));
    assert_eq!(code, 2);
}

#[test]
fn opnorm_l1_crossed_pair() {
    let dir = tempfile::tempdir().unwrap();
    let (space, a, b) = uniform4_docs(dir.path());
    let out = dir.path().join("opnorm.json");
    let code = run(args(&[
        "opnorm",
        "--space",
        space.to_str().unwrap(),
        "--a",
        a.to_str().unwrap(),
        "--b",
        b.to_str().unwrap(),
        "--p",
        "1",
        "--q",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out).unwrap()).unwrap();
    assert_eq!(report["report"]["exact_value"], "1/1");
    assert_eq!(report["report"]["exact"], true);
    assert!(report["report"]["witness"]["values"].is_object());
}

#[test]
fn malformed_document_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"outcomes": [{"id":"w1","mass":"2/3"}]}"#);
    let (_, a, _) = uniform4_docs(dir.path());
    let code = run(args(&[
        "metric",
        "--space",
        bad.to_str().unwrap(),
        "--a",
        a.to_str().unwrap(),
        "--b",
        a.to_str().unwrap(),
    ]));
    assert_eq!(code, 2);
}

#[test]
fn indep_exit_codes_follow_the_answer() {
    let dir = tempfile::tempdir().unwrap();
    let (space, a, b) = uniform4_docs(dir.path());
    let trivial = write(
        dir.path(),
        "trivial.json",
        r#"{"space":"space.json","atoms":[["w1","w2","w3","w4"]]}"#,
    );
    // crossed pairs are independent: exit 0
    let code = run(args(&[
        "indep",
        "--space",
        space.to_str().unwrap(),
        "--family",
        &format!("{},{}", a.to_str().unwrap(), b.to_str().unwrap()),
        "--given",
        trivial.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    // a field against itself is dependent: exit 1
    let code = run(args(&[
        "indep",
        "--space",
        space.to_str().unwrap(),
        "--family",
        &format!("{},{}", a.to_str().unwrap(), a.to_str().unwrap()),
        "--given",
        trivial.to_str().unwrap(),
    ]));
    assert_eq!(code, 1);
}

#[test]
fn detect_runs_explicit_scenario_and_emits_csv() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "scenario.json",
        r#"{
            "type": "explicit",
            "params": {
                "space": {"outcomes": [
                    {"id":"w1","mass":"1/4"},{"id":"w2","mass":"1/4"},
                    {"id":"w3","mass":"1/4"},{"id":"w4","mass":"1/4"}
                ]},
                "b0": {"atoms": [["w1","w2","w3","w4"]]},
                "stages": [
                    {"atoms": [["w1","w2"],["w3","w4"]]},
                    {"atoms": [["w1","w3"],["w2","w4"]]},
                    {"atoms": [["w1","w2"],["w3","w4"]]},
                    {"atoms": [["w1","w3"],["w2","w4"]]}
                ]
            }
        }"#,
    );
    let out = dir.path().join("report.json");
    let csv = dir.path().join("series.csv");
    let code = run(args(&[
        "detect",
        "--scenario",
        scenario.to_str().unwrap(),
        "--modes",
        "WC,SC,HC,STC,ASC,MC,OC",
        "--horizon",
        "4",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["report"]["horizon"], 4);
    assert!(report["report"]["stc"]["liminf_atoms"].is_array());
    let csv_text = fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("n,mode,statistic,exact\n"));
    // constant-to-trivial weak statistic is exactly zero in every row
    assert!(csv_text.lines().any(|l| l.starts_with("1,WC,0,true")));
}

#[test]
fn gallery_list_and_run() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(args(&["gallery", "list"])), 0);
    let out = dir.path().join("gallery.json");
    let csv = dir.path().join("gallery.csv");
    let code = run(args(&[
        "gallery",
        "run",
        "dyadic-weak",
        "--horizon",
        "5",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    let claims = report["report"]["claims"].as_array().unwrap();
    assert!(claims.iter().all(|c| c["passed"].as_bool().unwrap()));
    // the √6 identities are in the report
    assert!(claims.iter().any(|c| c["id"] == "dyadic-cond-indep"));
    assert_eq!(run(args(&["gallery", "run", "no-such-entry"])), 2);
}

#[test]
fn fuzz_subcommand_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("fuzz.json");
    let code = run(args(&[
        "fuzz",
        "--seed",
        "42",
        "--trials",
        "25",
        "--checks",
        "landers,sandwich,lattice-laws",
        "--max-outcomes",
        "5",
        "--report",
        report.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let parsed: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(parsed["seed"], 42);
    assert_eq!(parsed["results"].as_array().unwrap().len(), 3);
}

#[test]
fn fuzz_rejects_unknown_check() {
    assert_eq!(run(args(&["fuzz", "--trials", "1", "--checks", "nope"])), 2);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn eisen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eisen")).args(args).env_remove("EISEN_CACHE_DIR").output().expect("spawn eisen")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.trim().is_empty()).map(String::from).collect()
}

#[test]
fn verify_json_record() {
    let o = eisen(&["verify", "mazur", "--N", "11", "--p", "5", "--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["check"], "mazur");
    assert_eq!(v["N"], 11);
    assert_eq!(v["p"], 5);
    assert_eq!(v["t"], 1);
    assert_eq!(v["s"], 1);
    assert_eq!(v["status"], "PASS");
    assert_eq!(v["invariants"], serde_json::json!([1]));
    for k in ["M", "v", "merel_log", "timings_ms", "seed"] {
        assert!(v[k].is_u64(), "{k}");
    }
    assert!(v["version"].is_string());
}

#[test]
fn verify_text_and_layer() {
    let o = eisen(&["verify", "bridge", "--N", "101", "--p", "5", "--s", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&eisen(&["verify", "nope", "--N", "11", "--p", "5"])), 3);
    assert_eq!(code(&eisen(&["verify", "hida", "--N", "13", "--p", "5"])), 3);
    assert_eq!(code(&eisen(&["verify", "mazur", "--N", "11", "--p", "5", "--s", "2"])), 3);
    assert_eq!(code(&eisen(&["verify", "mazur"])), 3);
    assert_eq!(code(&eisen(&["identity", "--ell", "4"])), 3);
    assert_eq!(code(&eisen(&["frobnicate"])), 3);
}

#[test]
fn empty_survey_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = eisen(&["survey", "--nmax", "10", "--out", out]);
    assert_eq!(code(&o), 0);
    let csv = lines(&dir.path().join("summary.csv"));
    assert_eq!(csv.len(), 1);
    assert!(csv[0].starts_with("check,N,p,t,s,M,status"));
    assert!(lines(&dir.path().join("reports.jsonl")).is_empty());
}

#[test]
fn survey_is_a_bijection_and_incremental() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["survey", "--pairs", "11:5", "--out", out, "--jobs", "1"];
    let o = eisen(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json = lines(&dir.path().join("reports.jsonl"));
    let csv = lines(&dir.path().join("summary.csv"));
    assert_eq!(json.len(), 6);
    assert_eq!(csv.len(), json.len() + 1);
    let mut rdr = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    for (row, j) in rdr.records().zip(&json) {
        let row = row.unwrap();
        let v: serde_json::Value = serde_json::from_str(j).unwrap();
        assert_eq!(row[0], v["check"].as_str().unwrap()[..]);
        assert_eq!(row[1], v["N"].to_string());
        assert_eq!(row[4], v["s"].to_string());
        assert_eq!(row[6], v["status"].as_str().unwrap()[..]);
        assert_eq!(row[6], *"PASS");
    }

    let again = eisen(&args);
    assert_eq!(code(&again), 0);
    assert!(stdout(&again).trim().is_empty());
    assert_eq!(lines(&dir.path().join("reports.jsonl")), json);

    let reseeded = eisen(&["survey", "--pairs", "11:5", "--out", out, "--seed", "7", "--checks", "mazur"]);
    assert_eq!(code(&reseeded), 0);
    assert_eq!(lines(&dir.path().join("reports.jsonl")).len(), 7);
}

#[test]
fn survey_env_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_eisen"))
        .args(["survey", "--pairs", "11:5", "--checks", "mazur"])
        .env("EISEN_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(lines(&dir.path().join("reports.jsonl")).len(), 1);
}

#[test]
fn survey_io_error() {
    let o = eisen(&["survey", "--pairs", "11:5", "--out", "/proc/eisen-no-such-dir"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn corrupted_fixture_fails() {
    let o = eisen(&["verify", "sharifi_shadows", "--N", "11", "--p", "5", "--corrupt-fixture"]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn identity_l2() {
    let o = eisen(&["identity", "--ell", "2"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("# N=11, p=5, s=1: Verified"), "{s}");
}

#[test]
fn identity_l5_matches_bundled() {
    let o = eisen(&["identity", "--ell", "5"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("# N=11, p=5, s=1: Verified"), "{s}");
    assert!(s.contains("equivalence with the bundled ℓ = 5 identity: Verified"), "{s}");
}

use std::process::{Command, Output};

use serde_json::Value;

fn cmtwist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmtwist"))
        .args(args)
        .env_remove("CMTWIST_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn verify_passes_for_q7_r65() {
    let out = cmtwist(&["verify", "--q", "7", "--R", "65"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    let top = report["divisors"].as_array().unwrap().iter().find(|r| r["d"] == 65).unwrap();
    assert_eq!(top["ord_p"], 2);
    assert_eq!(top["msl_ord"], 1);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["status"] != "fail"));
}

#[test]
fn verify_rejects_split_prime() {
    let out = cmtwist(&["verify", "--q", "7", "--R", "29"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not in the twist family"));
}

#[test]
fn verify_rejects_bad_field_and_config() {
    assert_eq!(cmtwist(&["verify", "--q", "11", "--R", "5"]).status.code(), Some(4));
    assert_eq!(cmtwist(&["verify", "--q", "7", "--R", "5", "--prec", "8"]).status.code(), Some(4));
}

#[test]
fn verify_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.tsv");
    let out = cmtwist(&["verify", "--q", "7", "--R", "5", "--format", "tsv", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("kind\tq\tR"));
    assert!(text.lines().any(|l| l.starts_with("check\t7\t5\t") && l.contains("two_path_agreement")));
}

#[test]
fn reports_are_reproducible() {
    let a = cmtwist(&["verify", "--q", "7", "--R", "5"]);
    let b = cmtwist(&["verify", "--q", "7", "--R", "5"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn lvalue_methods_agree() {
    let out = cmtwist(&["lvalue", "--q", "7", "--d", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r["msl"], "1/2 + 0*w");
        assert_eq!(r["msl_ord"], -1);
    }
    let re = |r: &Value| r["re"].as_str().unwrap().parse::<f64>().unwrap();
    assert!((re(&rows[0]) - re(&rows[1])).abs() < 1e-15);
}

#[test]
fn lvalue_rejects_non_divisor() {
    let out = cmtwist(&["lvalue", "--q", "7", "--d", "13", "--R", "5"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn lvalue_series_cache_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let first = cmtwist(&["lvalue", "--q", "23", "--d", "5", "--method", "afe", "--cache-dir", d]);
    assert_eq!(first.status.code(), Some(0));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files.iter().filter(|f| f.to_string_lossy().starts_with("series-")).count(), 3);
    let second = cmtwist(&["lvalue", "--q", "23", "--d", "5", "--method", "afe", "--cache-dir", d]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn scan_empty_range() {
    let out = cmtwist(&["scan", "--q", "7", "--max-R", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out), Value::Array(vec![]));
}

#[test]
fn scan_resumes_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let first = cmtwist(&["scan", "--q", "7", "--max-R", "15", "--cache-dir", d]);
    assert_eq!(first.status.code(), Some(0));
    let rows = json(&first);
    let rs: Vec<u64> = rows.as_array().unwrap().iter().map(|r| r["R"].as_u64().unwrap()).collect();
    assert_eq!(rs, vec![5, 13]);

    let second = Command::new(env!("CARGO_BIN_EXE_cmtwist"))
        .args(["scan", "--q", "7", "--max-R", "20"])
        .env("CMTWIST_CACHE_DIR", d)
        .output()
        .unwrap();
    assert_eq!(second.status.code(), Some(0));
    let rows = json(&second);
    let cached: Vec<(u64, bool)> =
        rows.as_array().unwrap().iter().map(|r| (r["R"].as_u64().unwrap(), r["cached"].as_bool().unwrap())).collect();
    assert_eq!(cached, vec![(5, true), (13, true), (17, false)]);
    assert!(String::from_utf8_lossy(&second.stderr).contains("2 cached, 1 computed"));
}

#[test]
fn stale_cache_entries_are_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(cmtwist(&["scan", "--q", "7", "--max-R", "5", "--cache-dir", d]).status.code(), Some(0));
    let path = dir.path().join("report-q7-R5.json");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("version=", "version=0.0.0-old", 1)).unwrap();
    let again = cmtwist(&["scan", "--q", "7", "--max-R", "5", "--cache-dir", d]);
    assert_eq!(json(&again)[0]["cached"], false);
    let other_prec = cmtwist(&["scan", "--q", "7", "--max-R", "5", "--cache-dir", d, "--prec", "160"]);
    assert_eq!(json(&other_prec)[0]["cached"], false);
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmtwist(&["selftest", "--cache-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let poly = std::fs::read_to_string(dir.path().join("classpoly-q7.txt")).unwrap();
    assert_eq!(poly.lines().nth(1), Some("3375 1"));
}

//! Runs `selftest --seed 7 --threads 1` twice through the binary, prints one
//! line per acceptance criterion and fails if any criterion fails.

use std::process::Command;

use serde_json::Value;

fn selftest_run() -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_annulus-bnf"))
        .args(["selftest", "--seed", "7", "--threads", "1"])
        .output()
        .expect("selftest binary runs");
    eprint!("{}", String::from_utf8_lossy(&out.stderr));
    (out.stdout, out.status.code().unwrap_or(-1))
}

#[test]
fn acceptance_criteria() {
    let (first, first_code) = selftest_run();
    let (second, _) = selftest_run();
    let report: Value = serde_json::from_slice(&first).expect("selftest prints a JSON report");
    let criteria = report["criteria"].as_array().expect("criteria list");
    assert_eq!(criteria.len(), 10);

    let reproducible = first == second;
    let mut failed = vec![];
    for c in criteria {
        let id = c["id"].as_u64().unwrap();
        let mut passed = c["passed"].as_bool().unwrap();
        if id == 10 {
            passed &= reproducible;
        }
        println!(
            "criterion {id:>2} {:<28} {}  {}",
            c["name"].as_str().unwrap(),
            if passed { "PASS" } else { "FAIL" },
            c["details"]
        );
        if !passed {
            failed.push(id);
        }
    }
    println!("reports of the two runs identical: {reproducible}");
    assert_eq!(first_code, if failed.is_empty() { 0 } else { 2 });
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_annulus-bnf")).arg("--no-such-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn normal_form_of_a_twist_file() {
    let dir = std::env::temp_dir().join(format!("annulus-bnf-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let map = dir.join("twist.json");
    let status = Command::new(env!("CARGO_BIN_EXE_annulus-bnf"))
        .args(["map", "integrable", "--omega0", "golden", "--out"])
        .arg(&map)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_annulus-bnf"))
        .args(["bnf", "compute", "--order", "8", "--map"])
        .arg(&map)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["xi"].as_array().unwrap().len(), 9);
    std::fs::remove_dir_all(&dir).ok();
}

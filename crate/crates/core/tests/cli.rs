use std::path::Path;
use std::process::{Command, Output};

use fairleak::harness::read_report_json;

fn fairleak(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairleak"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

const INSTANCE: &str = "id,y,yhat,s_hat,confidence,s_true
10,0,1,1,0.1,0
11,0,1,1,1,1
12,0,0,0,1,0
13,0,0,0,0.2,1
";

#[test]
fn correct_writes_corrected_vector_and_report() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "inst.csv", INSTANCE);
    let out = fairleak(
        &["correct", "--input", "inst.csv", "--metric", "sp", "--epsilon", "0.1", "--out", "fixed.csv", "--report", "r.json"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("objective 0.300000"));
    let fixed = std::fs::read_to_string(dir.path().join("fixed.csv")).unwrap();
    assert_eq!(fixed, "id,s_star,changed\n10,0,1\n11,1,0\n12,0,0\n13,1,1\n");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["changed"], 2);
    assert_eq!(report["satisfied"], true);
    assert_eq!(report["baseline_accuracy"], 0.5);
    assert_eq!(report["corrected_accuracy"], 1.0);
    assert!(report.get("wall_time").is_none());
}

#[test]
fn strategies_agree() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "inst.csv", INSTANCE);
    let stdout: Vec<String> = ["sweep", "best-first", "exhaustive"]
        .iter()
        .map(|s| {
            let out = fairleak(
                &["correct", "--input", "inst.csv", "--metric", "sp", "--epsilon", "0.1", "--strategy", s],
                dir.path(),
            );
            assert!(out.status.success());
            String::from_utf8(out.stdout).unwrap()
        })
        .collect();
    assert!(stdout.windows(2).all(|w| w[0] == w[1]), "{stdout:?}");
}

#[test]
fn multi_valued_guess_uses_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "k3.csv", "id,y,yhat,s_hat,confidence\n1,0,1,0,1\n2,0,0,1,1\n3,0,1,2,1\n");
    let out = fairleak(&["correct", "--input", "k3.csv", "--metric", "sp", "--epsilon", "0.7"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("objective 0.000000, 0 of 3"));
}

#[test]
fn infeasible_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "one.csv", "id,y,yhat,s_hat,confidence\n1,0,1,1,0.5\n");
    let out = fairleak(&["correct", "--input", "one.csv", "--metric", "sp", "--epsilon", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_input_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "no_conf.csv", "id,y,yhat,s_hat\n1,0,1,1\n");
    write(dir.path(), "dup.csv", "id,y,yhat,s_hat,confidence\n1,0,1,1,1\n1,0,0,0,1\n");
    write(dir.path(), "neg.csv", "id,y,yhat,s_hat,confidence\n1,0,1,1,-1\n2,0,0,0,1\n");
    for file in ["no_conf.csv", "dup.csv", "neg.csv", "missing.csv"] {
        let out = fairleak(&["correct", "--input", file, "--metric", "sp", "--epsilon", "0.1"], dir.path());
        assert_eq!(out.status.code(), Some(3), "{file}: {}", String::from_utf8_lossy(&out.stderr));
    }
    write(dir.path(), "inst.csv", INSTANCE);
    let out = fairleak(&["correct", "--input", "inst.csv", "--metric", "sp", "--epsilon", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn synth_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let out = fairleak(&["synth", "--n", "400", "--seed", "5", "--out", "d.csv"], dir.path());
    assert!(out.status.success());
    let a = std::fs::read(dir.path().join("d.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 401);

    // The generated table has no prediction column; estimation refuses it.
    let out = fairleak(&["estimate", "--attack-set", "d.csv", "--schema", "d.schema.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));

    write(
        dir.path(),
        "attack.csv",
        "id,s,y,yhat\n1,0,0,0\n2,0,1,1\n3,1,0,1\n4,1,1,1\n5,0,0,0\n6,1,1,0\n",
    );
    write(
        dir.path(),
        "attack.schema.json",
        r#"{"id":"id","features":[],"sensitive":"s","label":"y","prediction":"yhat"}"#,
    );
    let out = fairleak(&["estimate", "--attack-set", "attack.csv", "--schema", "attack.schema.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let est: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(est["spec"]["metric"], "sp");
    assert_eq!(est["spec"]["epsilon"], 1.0 / 6.0);
}

#[test]
fn attack_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    assert!(fairleak(&["synth", "--n", "1500", "--seed", "2", "--out", "d.csv"], dir.path()).status.success());
    let out = fairleak(
        &[
            "attack", "--data", "d.csv", "--schema", "d.schema.json", "--metric", "sp,pe", "--epsilon-grid", "0,0.1,1",
            "--seeds", "0..3", "--oracle-check", "--out", "r.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_report_json(std::fs::File::open(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report.cells.len(), 3 * 2 * 3);
    assert!(report.cells.iter().all(|c| c.oracle_match != Some(false)));
    assert!(report
        .cells
        .iter()
        .filter(|c| c.epsilon == 1.0)
        .all(|c| c.corrected_accuracy == c.baseline_accuracy));
}

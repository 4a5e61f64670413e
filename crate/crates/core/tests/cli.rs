use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use eigenchaos::entries_partition;

fn eigenchaos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eigenchaos"))
        .args(args)
        .env_remove("EIGENCHAOS_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const OU_CONFIG: &str = r#"{
    "kind": "ou_decorrelation",
    "n_list": [8, 12],
    "alphas": [{"index": 1}, {"quantile": 0.5}],
    "params": {"controls": [0.0, 0.5, 1.5]},
    "trials": 40,
    "master_seed": 17
}"#;

#[test]
fn version_prints_build_identity() {
    let o = eigenchaos(&["version"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("eigenchaos "), "{s}");
    assert!(s.contains("build"), "{s}");
}

#[test]
fn valid_partition_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    fs::write(&path, entries_partition(4).unwrap().to_text()).unwrap();
    let o = eigenchaos(&["validate-partition", "--file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn invalid_partition_file_fails_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    // n = 2 with (1,2) and (2,1) split across blocks.
    fs::write(&path, "2 2 2\n1,1 1,2\n2,1 2,2\n").unwrap();
    let o = eigenchaos(&["validate-partition", "--file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn missing_partition_file_is_invalid_input() {
    let o = eigenchaos(&["validate-partition", "--file", "/nonexistent/partition.txt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_config_is_reported() {
    let o = eigenchaos(&["run", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config not found"), "{}", stderr(&o));
}

#[test]
fn malformed_config_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"kind": "ou_decorrelation", "n_list": [8]"#);
    let o = eigenchaos(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ou.json", OU_CONFIG);
    let out = dir.path().join("ou.csv");
    let o = eigenchaos(&["run", "--config", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(eigenchaos::experiments::CSV_HEADER));
    assert_eq!(lines.count(), 2 * 2 * 3);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ou.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["master_seed"], 17);
    // Only the two final files remain: no temporary leftovers.
    let mut names: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["ou.csv", "ou.json", "ou.meta.json"]);
}

fn values_only(csv: &str) -> Vec<String> {
    csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ou.json", OU_CONFIG);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("ou{threads}.csv"));
        let o = eigenchaos(&["--threads", threads, "run", "--config", &cfg, "--output", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push(values_only(&fs::read_to_string(out).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn pdbr_identity_check_passes() {
    let o = eigenchaos(&["check-identity", "pdbr", "--n", "2", "--trials", "2e4", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn identity_check_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cov.json");
    let o = eigenchaos(&[
        "check-identity", "pdbou-cov", "--k-b", "1", "--trials", "20000", "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert!(v["z"].as_f64().unwrap() <= 4.0);
}

#[test]
fn t_plus_minus_beyond_cap_is_not_asserted() {
    let o = eigenchaos(&["check-identity", "t-plus-minus", "--n", "3", "--t", "5", "--trials", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("not asserted"));
}

#[test]
fn block_ou_config_beyond_time_cap_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "pdbou.json",
        r#"{"kind": "pdbou_decorrelation", "n_list": [6], "params": {"times": [0.5, 2.0]}, "trials": 20, "master_seed": 1}"#,
    );
    let o = eigenchaos(&["run", "--config", &cfg, "--output", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn sweep_path_emits_csv() {
    let o = eigenchaos(&["sweep-path", "--n", "6", "--grid", "5", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 6);
}

#[test]
fn oracle_suite_passes() {
    let o = eigenchaos(&["oracle-suite", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("[PASS]"));
    assert!(!stdout(&o).contains("[FAIL]"));
}

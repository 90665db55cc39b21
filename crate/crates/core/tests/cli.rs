use std::path::Path;
use std::process::{Command, Output};

use coordlab::cli::{cmd_region, ExitStatus, ProblemSpec, RegionDocument, RunOptions};

const SPEC: &str = r#"{
    "schema_version": 1,
    "network": "two_node",
    "alphabets": {"x": 2, "y": 2},
    "source": [0.5, 0.5],
    "target": [[0.9, 0.1], [0.1, 0.9]],
    "delta_grid": [0.0, 0.1],
    "n_grid": [2, 4],
    "rates": [{"R1": 0.5}],
    "monte_carlo": {"samples": 200, "seed": 3}
}"#;

const CASCADE: &str = r#"{
    "schema_version": 1,
    "network": "cascade",
    "alphabets": {"x": 2, "y": 2, "z": 2},
    "source": [0.5, 0.5],
    "target": [[0.7, 0.1, 0.1, 0.1], [0.1, 0.1, 0.1, 0.7]],
    "delta_grid": [0.05],
    "n_grid": [2],
    "rates": [{"R1": 1.0, "R2": 0.5}],
    "monte_carlo": {"samples": 100, "seed": 1},
    "solver": {"scalarization_weights": [0.0, 0.5, 1.0]}
}"#;

fn coordlab(args: &[&str], spec: &str, dir: &Path) -> Output {
    let path = dir.join("spec.json");
    std::fs::write(&path, spec).unwrap();
    Command::new(env!("CARGO_BIN_EXE_coordlab"))
        .args(args)
        .arg("--spec")
        .arg(&path)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

#[test]
fn region_and_simulate_succeed() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(coordlab(&["region"], SPEC, dir.path()).status.code(), Some(0));
    assert_eq!(coordlab(&["simulate"], SPEC, dir.path()).status.code(), Some(0));
    for name in ["frontier.csv", "frontier.json", "simulation.csv", "simulation.json"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("simulation.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("n,R1,R2,delta"));
}

#[test]
fn cascade_specs_run_region_and_simulate() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(coordlab(&["region"], CASCADE, dir.path()).status.code(), Some(0));
    assert_eq!(coordlab(&["simulate"], CASCADE, dir.path()).status.code(), Some(0));
    let out = coordlab(&["oracle"], CASCADE, dir.path());
    assert_eq!(out.status.code(), Some(ExitStatus::Usage.code()));
    assert!(String::from_utf8_lossy(&out.stderr).contains("network"));
}

#[test]
fn schema_errors_exit_with_usage_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = coordlab(&["region"], &SPEC.replace("[0.5, 0.5]", "[0.5, 0.6]"), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("source"));
    let out = coordlab(&["region"], "{ not json", dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn missing_spec_is_an_io_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_coordlab"))
        .args(["region", "--spec", "/nonexistent/spec.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_flag_overrides_the_spec() {
    let dir = tempfile::tempdir().unwrap();
    let read = |d: &Path| std::fs::read(d.join("simulation.json")).unwrap();
    coordlab(&["simulate"], SPEC, dir.path());
    let spec_seed = read(dir.path());
    coordlab(&["simulate", "--seed", "3"], SPEC, dir.path());
    assert_eq!(read(dir.path()), spec_seed);
    coordlab(&["simulate", "--seed", "4"], SPEC, dir.path());
    assert_ne!(read(dir.path()), spec_seed);
}

#[test]
fn oracle_budget_exhaustion_exits_partial() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SPEC.replace("\"n_grid\": [2, 4]", "\"n_grid\": [1, 2], \"oracle\": {\"budget\": 2}");
    let out = coordlab(&["oracle"], &spec, dir.path());
    assert_eq!(out.status.code(), Some(ExitStatus::Partial.code()));
    assert!(dir.path().join("scan.csv").is_file());
}

#[test]
fn oracle_with_zero_budget_writes_an_empty_partial_table() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SPEC.replace("\"n_grid\": [2, 4]", "\"n_grid\": [1], \"oracle\": {\"budget\": 0}");
    let out = coordlab(&["oracle"], &spec, dir.path());
    assert_eq!(out.status.code(), Some(ExitStatus::Partial.code()));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert!(csv.starts_with("# consistency scan"));
    assert_eq!(csv.lines().count(), 2, "{csv}");
}

#[test]
fn oracle_on_the_identity_reaches_zero_rate_at_delta_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SPEC
        .replace("[[0.9, 0.1], [0.1, 0.9]]", "[[1.0, 0.0], [0.0, 1.0]]")
        .replace("[0.0, 0.1]", "[0.0, 1.0]")
        .replace("[2, 4]", "[1, 2]");
    let out = coordlab(&["oracle"], &spec, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let mut rows = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let trivial: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).filter(|r| &r[1] == "1").collect();
    assert_eq!(trivial.len(), 2);
    for row in trivial {
        assert_eq!(&row[4], "0");
        assert_eq!(&row[5], "1");
    }
}

#[test]
fn check_runs_the_battery() {
    let out = Command::new(env!("CARGO_BIN_EXE_coordlab")).args(["check", "--seed", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("ok")));
    assert!(text.contains("achievability chain"));
}

#[test]
fn library_entry_point_matches_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ProblemSpec::from_json(SPEC).unwrap();
    let report = cmd_region(&spec, &RunOptions { out: dir.path().join("lib"), seed: None }).unwrap();
    assert_eq!(report.status, ExitStatus::Ok);
    coordlab(&["region"], SPEC, dir.path());
    let lib = std::fs::read(dir.path().join("lib/frontier.json")).unwrap();
    assert_eq!(lib, std::fs::read(dir.path().join("frontier.json")).unwrap());
    let doc: RegionDocument = serde_json::from_slice(&lib).unwrap();
    assert_eq!(doc.frontiers.len(), 2);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn map(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_map")).args(args).output().expect("binary runs")
}

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = r#"{
  "topology": {"grid": {"rows": 3, "cols": 3}},
  "requests": {"generate": {"count": 5}},
  "mapping_limit": 10,
  "algorithms": ["ga"],
  "repetitions": 3
}"#;

#[test]
fn run_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (csv, json) = (dir.path().join("runs.csv"), dir.path().join("agg.json"));
    let out = map(&[
        "run", "--config", cfg.to_str().unwrap(),
        "--out-csv", csv.to_str().unwrap(),
        "--out-json", json.to_str().unwrap(),
        "--algorithms", "ga,bf",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seed,algorithm,served,fitness,feasible,wall_ms");
    assert_eq!(lines.len(), 1 + 3 * 2);
    assert!(lines[1].starts_with("0,ga,") && lines[2].starts_with("0,bf,"));
    let agg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(agg["optimality_rate"].is_number());
    assert!(agg["served_match_rate"].as_f64().unwrap() <= 1.0);
}

#[test]
fn run_is_byte_stable_without_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let p = dir.path().join(name);
        let out = map(&["run", "--config", cfg.to_str().unwrap(), "--seed", "42", "--no-timing", "--out-csv", p.to_str().unwrap()]);
        assert!(out.status.success());
        outputs.push(std::fs::read(p).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(String::from_utf8_lossy(&outputs[0]).contains("\n42,ga,"));
}

#[test]
fn shipped_scenarios_run() {
    let out = map(&["run", "--config", data("scenarios/eight_node.json").to_str().unwrap(), "--no-timing"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let agg: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(agg["compared_runs"], 10);
}

#[test]
fn topo_grid_and_random() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    assert!(map(&["topo", "--grid", "6x6", "--out", grid.to_str().unwrap()]).status.success());
    let t = testbed_slicing::load_topology(&grid).unwrap();
    assert_eq!((t.n_nodes(), t.edge_count(0)), (36, 60));

    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        assert!(map(&["topo", "--random", "25,0.3", "--seed", "42", "--out", p.to_str().unwrap()]).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn topo_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    assert_eq!(map(&["topo", "--grid", "0x3", "--out", p.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(map(&["topo", "--random", "5,1.5", "--out", p.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(map(&["topo", "--out", p.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn gen_requests_writes_valid_batch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_path = dir.path().join("reqs.json");
    let out = map(&["gen-requests", "--config", cfg.to_str().unwrap(), "--count", "7", "--seed", "3", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reqs = testbed_slicing::request::load_requests(&out_path).unwrap();
    assert_eq!(reqs.len(), 7);

    // the batch can be fed back through a file-based scenario
    let body = format!(
        r#"{{"topology": {{"grid": {{"rows": 3, "cols": 3}}}}, "requests": {{"file": {{"path": "{}"}}}}, "repetitions": 2}}"#,
        out_path.display()
    );
    let cfg = write_config(dir.path(), &body);
    assert!(map(&["run", "--config", cfg.to_str().unwrap()]).status.success());
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"topology": {"grid": {"rows": 3}}}"#);
    assert_eq!(map(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    let missing = dir.path().join("nope.json");
    assert_eq!(map(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
    let cfg = write_config(dir.path(), SMALL);
    assert_eq!(map(&["run", "--config", cfg.to_str().unwrap(), "--algorithms", "sa"]).status.code(), Some(1));
}

#[test]
fn output_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let bad = dir.path().join("missing-dir").join("out.csv");
    assert_eq!(map(&["run", "--config", cfg.to_str().unwrap(), "--out-csv", bad.to_str().unwrap()]).status.code(), Some(2));
}

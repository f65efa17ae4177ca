use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use xlayer_milp::{parse_model, Format};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_xlayer-surv"));
    c.env_remove("XLAYER_SURV_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> &str {
    std::str::from_utf8(&o.stdout).unwrap()
}

fn core_data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
        .display()
        .to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

/// Logical triangle on three corners of a physical square, each logical link
/// on its own physical links.
const TRIANGLE: &str = r#"{
  "physical": {"nodes": ["p0", "p1", "p2", "p3"], "edges": [
    {"u": "p0", "v": "p1", "rho": 0.1}, {"u": "p1", "v": "p2", "rho": 0.1},
    {"u": "p2", "v": "p3", "rho": 0.1}, {"u": "p3", "v": "p0", "rho": 0.1}]},
  "logical": {"nodes": ["a", "b", "c"], "edges": [["a", "b"], ["b", "c"], ["c", "a"]]},
  "node_map": {"a": "p0", "b": "p1", "c": "p2"}
}"#;

const PAIR: &str = r#"{
  "physical": {"nodes": ["a", "b", "c", "d"], "edges": [
    {"u": "a", "v": "b", "rho": 0.1}, {"u": "b", "v": "c", "rho": 0.2},
    {"u": "c", "v": "d", "rho": 0.1}, {"u": "d", "v": "a", "rho": 0.3},
    {"u": "a", "v": "c", "rho": 0.05}]},
  "logical": {"nodes": ["s", "t"], "edges": [["s", "t"]]},
  "node_map": {"s": "b", "t": "d"}
}"#;

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["check", &write(dir.path(), "t.json", TRIANGLE), "--cross-check"]);
    assert_eq!(ok.status.code(), Some(0));
    let doc: Value = serde_json::from_str(stdout(&ok)).unwrap();
    assert_eq!(doc["survivable"], true);
    assert_eq!(doc["witness"]["routes"].as_array().unwrap().len(), 3);
    assert_eq!(doc["cross_check"]["agrees"], true);

    let ring = run(&["check", &core_data("six_ring.json"), "--cross-check"]);
    assert_eq!(ring.status.code(), Some(10));
    let doc: Value = serde_json::from_str(stdout(&ring)).unwrap();
    assert_eq!(doc["witness"], Value::Null);
    assert_eq!(doc["cross_check"]["milp_feasible"], false);

    let broken = run(&["check", &write(dir.path(), "b.json", "{\"physical\": ")]);
    assert_eq!(broken.status.code(), Some(2));
    let unknown = TRIANGLE.replace("\"c\": \"p2\"", "\"c\": \"p9\"");
    let invalid = run(&["check", &write(dir.path(), "u.json", &unknown)]);
    assert_eq!(invalid.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("p9"));
    assert_eq!(run(&["check", "/nonexistent/x.json"]).status.code(), Some(2));
}

#[test]
fn analyze_six_ring() {
    let path = core_data("six_ring.json");
    let a = run(&["analyze", &path]);
    assert_eq!(a.status.code(), Some(0));
    let doc: Value = serde_json::from_str(stdout(&a)).unwrap();
    let phi = doc["phi"].as_f64().unwrap();
    let tree = doc["max_tree"]["prob"].as_f64().unwrap();
    assert!((phi - 0.81).abs() < 1e-12);
    assert!((tree - 0.5832).abs() < 1e-12);
    assert!((doc["ratio"].as_f64().unwrap() - 0.5832 / 0.81).abs() < 1e-12);
    assert_eq!(doc["steiner_check"]["tree_matches_steiner"], true);
    assert_eq!(doc["k_min"], Value::Null);
    assert!(doc.get("wall_ms").is_none());
    assert_eq!(run(&["analyze", &path]).stdout, a.stdout);

    let timed: Value = serde_json::from_str(stdout(&run(&["analyze", &path, "--timing"]))).unwrap();
    assert!(timed["wall_ms"].as_f64().unwrap() >= 0.0);
    let flat: Value = serde_json::from_str(stdout(&run(&["analyze", &path, "--search", "flat"]))).unwrap();
    assert_eq!(flat["phi"], doc["phi"]);
}

#[test]
fn analyze_two_node_logical_network() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["analyze", &write(dir.path(), "p.json", PAIR)]);
    let doc: Value = serde_json::from_str(stdout(&o)).unwrap();
    // Most reliable b-d path: b-a-c-d.
    let best = 0.9 * 0.95 * 0.9;
    assert!((doc["phi"].as_f64().unwrap() - best).abs() < 1e-12);
    assert!((doc["max_tree"]["prob"].as_f64().unwrap() - best).abs() < 1e-12);
}

#[test]
fn pool_flags() {
    let path = core_data("six_ring.json");
    let k1 = run(&["analyze", &path, "--pool", "k-shortest:1"]);
    assert_eq!(k1.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&k1.stderr).contains("--exhaustive"));
    let doc: Value = serde_json::from_str(stdout(&k1)).unwrap();
    assert_eq!(doc["exhaustive"], false);
    assert!(doc["phi"].as_f64().unwrap() <= 0.81 + 1e-12);
    assert_eq!(run(&["analyze", &path, "--pool", "some:3"]).status.code(), Some(2));
    assert_eq!(
        run(&["analyze", &path, "--pool", "all", "--exhaustive"]).status.code(),
        Some(2)
    );
}

#[test]
fn export_matches_golden_and_round_trips() {
    let path = core_data("six_ring.json");
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../milp/tests/golden");
    for (fmt, file, format) in [
        ("lp", "six_ring_base_set.lp", Format::Lp),
        ("mps", "six_ring_base_set.mps", Format::Mps),
    ] {
        let o = run(&["export", &path, "--formulation", "base-set", "--format", fmt]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o), std::fs::read_to_string(golden.join(file)).unwrap());
        parse_model(stdout(&o), format).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.lp");
    let o = run(&[
        "export", &path, "--formulation", "max-tree", "--rho", "0.1", "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let m = parse_model(&std::fs::read_to_string(&out).unwrap(), Format::Lp).unwrap();
    assert_eq!(m.metadata().formulation, "max-tree");
    assert_eq!(run(&["export", &path, "--formulation", "robust"]).status.code(), Some(2));
    assert_eq!(run(&["export", &path, "--format", "json"]).status.code(), Some(2));
}

fn spec_path() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data/nsf14_unified.json")
        .display()
        .to_string()
}

#[test]
fn gen_is_seeded() {
    let a = run(&["gen", &spec_path()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(run(&["gen", &spec_path()]).stdout, a.stdout);
    let other = run(&["gen", &spec_path(), "--seed", "7"]);
    assert_ne!(other.stdout, a.stdout);
    let docs: Vec<Value> = serde_json::from_str(stdout(&a)).unwrap();
    assert_eq!(docs.len(), 4);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gen");
    run(&["gen", &spec_path(), "--out-dir", out.to_str().unwrap()]);
    let first = std::fs::read_to_string(out.join("inst-000.json")).unwrap();
    assert_eq!(serde_json::from_str::<Value>(&first).unwrap(), docs[0]);
    let check = run(&["check", out.join("inst-003.json").to_str().unwrap()]);
    assert!(matches!(check.status.code(), Some(0) | Some(10)));
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let three = dir.path().join("three.csv");
    let a = run(&["sweep", &spec_path(), one.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    run(&["sweep", &spec_path(), three.to_str().unwrap(), "--parallel", "3"]);
    let text = std::fs::read_to_string(&one).unwrap();
    assert_eq!(text, std::fs::read_to_string(&three).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# xlayer-surv sweep v1"));
    assert!(lines.next().unwrap().starts_with("instance,model,kind,param"));
    assert_eq!(text.lines().count(), 2 + 4 * 150);
    assert!(!text.contains('\r'));
    let err = String::from_utf8_lossy(&a.stderr);
    assert!(err.contains("ratio_non_decreasing=true"), "{err}");

    let timed = run(&["sweep", &spec_path(), "-", "--timing"]);
    assert!(stdout(&timed).lines().nth(1).unwrap().ends_with(",wall_ms"));
    let json = run(&["sweep", &spec_path(), "-", "--format", "json"]);
    let rows: Vec<Value> = serde_json::from_str(stdout(&json)).unwrap();
    assert_eq!(rows.len(), 600);
}

#[test]
fn log_level_comes_from_the_environment() {
    let quiet = run(&["analyze", &core_data("six_ring.json")]);
    assert!(quiet.stderr.is_empty());
    let loud = bin()
        .args(["analyze", &core_data("six_ring.json")])
        .env("XLAYER_SURV_LOG", "debug")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&loud.stderr).contains("DEBUG"));
    assert_eq!(loud.stdout, quiet.stdout);
}

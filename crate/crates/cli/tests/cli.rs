use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const TREE: &str = r#"{"group":{"factors":[{"cyclic":3}]},"vertices":4,
    "edges":[{"tail":0,"head":1,"voltage":[1]},{"tail":1,"head":2},{"tail":1,"head":3,"voltage":[2]}]}"#;

const BOUNDARY: &str = r#"{"group":{},"fiber_dims":[2,0],
    "blocks":[{"gamma":[],"matrix":[[1.0,0],[0,0],[0,0],[-0.3,0]]}]}"#;

fn ghl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghl"))
        .args(args)
        .env("GHL_THREADS", "2")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(experiment: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![experiment, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ghl(&args)
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn clifford_selftest_needs_no_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = ghl(&["clifford-selftest", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["pass"], true);
    assert!(v["checks"].as_array().unwrap().len() >= 5);
    assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
    assert!(dir.path().join("clifford.csv").exists());
    assert!(dir.path().join("verdict.json").exists());
}

#[test]
fn atiyah_tree_over_z3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.json", &format!(r#"{{"experiment":"atiyah","input":{{"graph":{TREE}}}}}"#));
    let o = run("atiyah", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["checks"][0]["measured"], 1.0);
    assert_eq!(v["checks"][0]["bound"], 1.0);
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/atiyah.json")).unwrap()).unwrap();
    assert_eq!(report["base_index"], 1);
    assert_eq!(report["cover_index"], 3);
}

#[test]
fn coarse_cylinder_grid_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{"experiment":"cylinder-kernels","input":{{"model":{{"boundary":{BOUNDARY},"R":6.0,"h":0.6}},"eps":[0.5]}}}}"#
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    let o = run("cylinder-kernels", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    let v = stdout_json(&o);
    assert_eq!(v["error"], "numerical");
    assert!(v["step"].as_f64().unwrap() >= v["limit"].as_f64().unwrap());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn demanded_rank_gap_out_of_reach_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{"experiment":"cylinder-kernels","tolerances":{{"rank_gap":1e300}},
            "input":{{"model":{{"boundary":{BOUNDARY},"R":6.0,"h":0.2}},"eps":[0.5],"refine":false}}}}"#
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    let o = run("cylinder-kernels", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    let v = stdout_json(&o);
    assert!(v["gap_ratio"].as_f64().unwrap() < v["threshold"].as_f64().unwrap());
}

#[test]
fn config_errors_exit_2_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.json",
        &format!(r#"{{"experiment":"atiyah","input":{{"graph":{TREE},"speed":3}}}}"#),
    );
    let o = run("atiyah", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["path"], "input.speed");

    let o = run("decay", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["path"], "experiment");

    let cfg = write_config(dir.path(), "t.json", r#"{"experiment":"clifford-selftest","tolerances":{"eta":-1}}"#);
    let o = run("clifford-selftest", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["path"], "tolerances.eta");

    assert_eq!(ghl(&["warp-drive"]).status.code(), Some(2));
    assert_eq!(ghl(&["atiyah"]).status.code(), Some(2));
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let graph = r#"{"vertices":2,"edges":[{"tail":0,"head":5}]}"#;
    let cfg = write_config(dir.path(), "a.json", &format!(r#"{{"experiment":"atiyah","input":{{"graph":{graph}}}}}"#));
    let o = run("atiyah", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["error"], "input");
}

#[test]
fn reruns_are_byte_identical_and_overwrites_need_force() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.json", r#"{"experiment":"eta-jump","input":{"count":4},"seed":11}"#);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("eta-jump", &cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(run("eta-jump", &cfg, &b, &[]).status.code(), Some(0));
    let csv_a = std::fs::read(a.join("eta_jump.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("eta_jump.csv")).unwrap());

    let again = run("eta-jump", &cfg, &a, &[]);
    assert_eq!(again.status.code(), Some(2));
    assert_eq!(std::fs::read(a.join("eta_jump.csv")).unwrap(), csv_a);

    let other = run("eta-jump", &cfg, &a, &["--force", "--seed", "12"]);
    assert_eq!(other.status.code(), Some(0));
    assert_eq!(stdout_json(&other)["seed"], 12);
    assert_ne!(std::fs::read(a.join("eta_jump.csv")).unwrap(), csv_a);
}

#[test]
fn eta_tower_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"experiment":"eta-tower","input":{"circle":{"sites":3,"flux":0.3,"potential":[1.4,1.6,-1.5]},
        "orders":[2,4,8,16]}}"#;
    let cfg = write_config(dir.path(), "t.json", body);
    let o = run("eta-tower", &cfg, &dir.path().join("out"), &[]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/eta_tower.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("level,d_i,eta_i,ratio,target,gap,b_i"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn shipped_configs_pass() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    for name in ["atiyah", "unfolding", "decay", "relative-decay", "duhamel", "cylinder-aps", "spectrum-bottom"] {
        let o = run(name, &root.join(format!("{name}.json")), &dir.path().join(name), &[]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn fuzz_seed_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/experiment_config");
    let mut seen = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        ghl_cli::config::validate_config(&text, None).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert_eq!(seen, 13);
}

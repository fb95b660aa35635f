use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mvghash(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvghash")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = mvghash(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small synthetic dataset; returns its manifest path.
fn dataset(dir: &Path) -> PathBuf {
    let out = dir.join("data");
    ok(&["synth", "--out-dir", p(&out), "--block-size", "15", "--seed", "2"]);
    out.join("manifest.json")
}

#[test]
fn train_then_eval_and_retrieve() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let codes = dir.path().join("codes.mvgh");
    let stdout = ok(&["train", "--manifest", p(&manifest), "--out", p(&codes), "--epochs-max", "30"]);
    let record: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(record["epochs"], 30);
    assert_eq!(record["load_options"]["row_normalize"], false);
    assert!(record["metrics"]["map_at_all"].as_f64().unwrap() > 0.0);

    let log = std::fs::read_to_string(dir.path().join("codes.mvgh.log.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 30);
    for key in ["epoch", "l_c_per_view", "l_q", "l_bb", "total", "lambda", "wall_ms"] {
        assert!(lines[0].get(key).is_some(), "{key}");
    }
    assert!(dir.path().join("codes.mvgh.run.json").exists());

    let report: serde_json::Value =
        serde_json::from_str(&ok(&["eval", "--codes", p(&codes), "--manifest", p(&manifest), "--cutoffs", "5,10"])).unwrap();
    assert_eq!(report["map_at_all"], record["metrics"]["map_at_all"]);
    assert_eq!(report["n"], 45);

    let hits = ok(&["retrieve", "--codes", p(&codes), "--query", "0,44", "--top", "4"]);
    let rows: Vec<serde_json::Value> = hits.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["query"], 44);
    assert_eq!(rows[0]["ranked"].as_array().unwrap().len(), 4);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"bits": 8, "tau": 0.5, "epochs_max": 4}"#).unwrap();
    let codes = dir.path().join("c.mvgh");
    let stdout = ok(&["train", "--manifest", p(&manifest), "--out", p(&codes), "--config", p(&cfg), "--tau", "0.3"]);
    let hp = &serde_json::from_str::<serde_json::Value>(&stdout).unwrap()["config"]["hp"];
    assert_eq!(hp["bits"], 8);
    assert_eq!(hp["tau"], 0.3);
    assert_eq!(hp["epochs_max"], 4);
    assert_eq!(hp["k"], 10);
}

#[test]
fn thread_count_does_not_change_codes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let codes = dir.path().join(format!("c{threads}.mvgh"));
        let out = Command::new(env!("CARGO_BIN_EXE_mvghash"))
            .env("MVGHASH_THREADS", threads)
            .args(["encode", "--manifest", p(&manifest), "--out", p(&codes), "--epochs-max", "40"])
            .output()
            .unwrap();
        assert!(out.status.success());
        files.push(std::fs::read(codes).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn neighbor_cache_round_trip_and_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let cache = dir.path().join("n.mvgn");
    ok(&["knn", "--manifest", p(&manifest), "--out", p(&cache), "--k", "4"]);
    let with_cache = dir.path().join("a.mvgh");
    let fresh = dir.path().join("b.mvgh");
    ok(&["encode", "--manifest", p(&manifest), "--out", p(&with_cache), "--neighbors", p(&cache), "--k", "4", "--epochs-max", "10"]);
    ok(&["encode", "--manifest", p(&manifest), "--out", p(&fresh), "--k", "4", "--epochs-max", "10"]);
    assert_eq!(std::fs::read(with_cache).unwrap(), std::fs::read(fresh).unwrap());

    let out = mvghash(&["train", "--manifest", p(&manifest), "--out", p(&dir.path().join("x")), "--neighbors", p(&cache)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("neighbor cache"));
}

#[test]
fn sweep_emits_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let grid = "0.005,0.01,0.05,0.1,0.5,1";
    let csv = ok(&["sweep", "--manifest", p(&manifest), "--alpha", grid, "--beta", grid, "--epochs-max", "3"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("method,dataset,bits,alpha,beta"));
    assert_eq!(lines.len(), 37);
}

#[test]
fn ablate_lists_four_variants() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let csv = ok(&["ablate", "--manifest", p(&manifest), "--epochs-max", "5"]);
    let methods: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods.len(), 4);
    assert!(methods.contains(&"CMGHash-f") && methods.contains(&"CMGHash"));
}

#[test]
fn filter_writes_one_file_per_view() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let out = dir.path().join("smoothed");
    ok(&["filter", "--manifest", p(&manifest), "--out-dir", p(&out), "--m", "3"]);
    assert!(out.join("view0.mvgf").exists() && out.join("view1.mvgf").exists());
}

#[test]
fn usage_errors_exit_2_and_runtime_errors_exit_1() {
    let usage = mvghash(&["train", "--no-such-flag"]);
    assert_eq!(usage.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let missing = mvghash(&["eval", "--codes", p(&dir.path().join("none")), "--labels", "x"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(missing.stdout.is_empty());
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let manifest = dataset(dir.path());
    let bad = mvghash(&["train", "--manifest", p(&manifest), "--out", p(&dir.path().join("c")), "--gamma", "1"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("gamma"));
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sbra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbra")).args(args).env_remove("SBRA_WORKERS").output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = sbra(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn without_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings_ms");
    v["params"].as_object_mut().unwrap().remove("workers");
    v
}

fn generated(dir: &Path, topology: &str, k: &str) -> String {
    let p = dir.join(format!("{topology}-{k}.json"));
    ok(&["generate", "--topology", topology, "--n", "3", "--k", k, "--seed", "4", "--out", p.to_str().unwrap()]);
    p.to_str().unwrap().to_string()
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = generated(dir.path(), "grid", "20");
    let b = dir.path().join("again.json");
    ok(&["generate", "--topology", "grid", "--n", "3", "--k", "20", "--seed", "4", "--out", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(read_json(Path::new(&a))["slot_count"], 20);
}

#[test]
fn run_writes_result_document() {
    let dir = tempfile::tempdir().unwrap();
    let s = generated(dir.path(), "grid", "21");
    for algo in ["greedy", "all-fixed"] {
        let out = dir.path().join(format!("{algo}.json"));
        ok(&["run", "--scenario", &s, "--algo", algo, "--out", out.to_str().unwrap()]);
        let doc = read_json(&out);
        assert_eq!(doc["algorithm"], algo);
        assert_eq!(doc["tool"], "sbra");
        assert_eq!(doc["links_per_slot"].as_array().unwrap().len(), 21);
        let per_node: f64 = doc["per_node_loss"].as_array().unwrap().iter().map(|n| n["bytes"].as_f64().unwrap()).sum();
        let total = doc["total_loss_bytes"].as_f64().unwrap();
        assert!((per_node - total).abs() <= 1e-6 * total.max(1.0));
    }
}

#[test]
fn ms_greedy_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let s = generated(dir.path(), "hex-small", "20");
    let mut docs = Vec::new();
    for w in ["1", "4"] {
        let out = dir.path().join(format!("ms{w}.json"));
        let log = dir.path().join(format!("ms{w}.csv"));
        ok(&[
            "run", "--scenario", &s, "--algo", "ms-greedy", "--omega", "3", "--iters", "4", "--window", "5", "--seed", "8",
            "--workers", w, "--out", out.to_str().unwrap(), "--log", log.to_str().unwrap(),
        ]);
        let doc = read_json(&out);
        assert_eq!(doc["params"]["iterations"], 15);
        assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 16);
        docs.push(without_timings(doc));
    }
    assert_eq!(docs[0], docs[1]);
}

#[test]
fn infeasible_slot_budget_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let s = generated(dir.path(), "grid", "20");
    let out = sbra(&["run", "--scenario", &s, "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("needs"));
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.json");
    std::fs::write(&p, "{").unwrap();
    assert_eq!(sbra(&["run", "--scenario", p.to_str().unwrap()]).status.code(), Some(1));
    let s = generated(dir.path(), "grid", "20");
    assert_eq!(sbra(&["run", "--scenario", &s, "--algo", "nope"]).status.code(), Some(1));
    assert_eq!(sbra(&["run", "--scenario", &s, "--weights", "1,2"]).status.code(), Some(1));
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    let out = dir.path().join("s.json");
    std::fs::write(&cfg, format!("topology = \"hex-small\"\nn = 3\nk = [25]\nseed = 2\nout = {:?}\n", out)).unwrap();
    ok(&["--config", cfg.to_str().unwrap(), "generate", "--seed", "3"]);
    let s = read_json(&out);
    assert_eq!(s["slot_count"], 25);
    assert_eq!(s["node_count"], 19);

    let direct = dir.path().join("direct.json");
    ok(&["generate", "--topology", "hex-small", "--n", "3", "--k", "25", "--seed", "3", "--out", direct.to_str().unwrap()]);
    assert_eq!(s, read_json(&direct));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "colour = 1\n").unwrap();
    assert_eq!(sbra(&["--config", bad.to_str().unwrap(), "generate"]).status.code(), Some(1));
}

#[test]
fn sweep_and_summary_files() {
    let dir = tempfile::tempdir().unwrap();
    let od = dir.path().join("out");
    ok(&[
        "sweep", "--topology", "grid", "--n", "3", "--k", "20,30", "--algo", "greedy,all-fixed", "--seeds", "0..3",
        "--out-dir", od.to_str().unwrap(),
    ]);
    let rows = std::fs::read_to_string(od.join("sweep.csv")).unwrap();
    let data: Vec<&str> = rows.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(data[0].starts_with("topology,n,k,algo,seed"));
    assert_eq!(data.len(), 1 + 2 * 2 * 3);
    let summary = std::fs::read_to_string(od.join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);
}

#[test]
fn tune_and_candidates_tables() {
    let dir = tempfile::tempdir().unwrap();
    let s = generated(dir.path(), "grid", "20");
    let t = dir.path().join("tune.csv");
    let out = ok(&["tune", "--scenario", &s, "--grid", "0,1", "--subsample", "10", "--out", t.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("best"));
    let rows = std::fs::read_to_string(&t).unwrap();
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 11);

    let c = ok(&["candidates", "--scenario", &s]);
    let text = String::from_utf8(c.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "d,n,d',n',form_slots,malt,a1,a2,a3,a4,a5,a6,a7");
    assert!(text.lines().count() > 1);
}

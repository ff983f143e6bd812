use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hetnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetnet")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write_small_config(dir: &Path) -> String {
    let path = dir.join("layout.toml");
    fs::write(&path, "num_macro_sites = 1\nlpns_per_site = 2\nues_per_site = 8\ndemand = 200000.0\n").unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_then_solve_each_policy() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let scenario = dir.path().join("scenario.json");
    let scenario = scenario.to_str().unwrap();
    let out = hetnet(&["generate", "--config", &config, "--seed", "4", "-o", scenario]);
    assert!(out.status.success());

    let zo = stdout_json(&hetnet(&["solve", "--scenario", scenario, "--policy", "zo"]));
    assert_eq!(zo["serving"].as_array().unwrap().len(), 8);

    let trace = dir.path().join("trace.jsonl");
    let oo = stdout_json(&hetnet(&[
        "solve",
        "--scenario",
        scenario,
        "--policy",
        "oo",
        "--trace",
        trace.to_str().unwrap(),
    ]));
    assert_eq!(oo["policy"], "OO");
    if zo["feasible"].as_bool().unwrap() {
        assert!(oo["objective"].as_f64().unwrap() <= zo["objective"].as_f64().unwrap());
    }
    let lines = fs::read_to_string(trace).unwrap();
    let first: Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    for key in ["iteration", "moved_position", "candidate_energy", "best_energy", "k", "tabu_snapshot"] {
        assert!(first.get(key).is_some(), "trace entry lacks {key}");
    }

    let nl = stdout_json(&hetnet(&["solve", "--scenario", scenario, "--policy", "nl"]));
    assert!(nl["serving"].as_array().unwrap().iter().all(|c| c == 0));
    assert!(nl["offsets_db"].is_null());

    let fixed = stdout_json(&hetnet(&["solve", "--scenario", scenario, "--offsets", "[\"-inf\", 4]", "--levels=-inf,0,4"]));
    assert_eq!(fixed["policy"], "fixed");
    assert_eq!(fixed["offsets_db"][0], "-inf");
}

#[test]
fn sweep_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    fs::write(
        &spec,
        "demands = [100000.0, 200000.0]\npolicies = [\"ZO\", \"NL\"]\nnum_seeds = 2\n\n[scenario]\nnum_macro_sites = 1\nues_per_site = 6\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = hetnet(&["sweep", "--config", spec.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    let summary = stdout_json(&out);
    assert_eq!(summary["num_seeds"], 2);
    for name in ["results.csv", "per_cell.csv", "results.json", "summary.json", "timings.csv"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let csv = fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn sweep_flags_override_the_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"scenario": {"num_macro_sites": 1, "lpns_per_site": 1, "ues_per_site": 4}}"#).unwrap();
    let out = hetnet(&[
        "sweep",
        "--config",
        spec.to_str().unwrap(),
        "--seeds",
        "1",
        "--demands",
        "150000",
        "--policies",
        "zo,mo",
        "--tolerance",
        "1e-10",
    ]);
    let summary = stdout_json(&out);
    let stats = summary["per_demand"][0]["policies"].as_array().unwrap();
    assert_eq!(stats.len(), 2);
}

#[test]
fn reduce_reports_an_independent_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("path.txt");
    fs::write(&graph, "# path 0-1-2\n0 1\n1 2\n").unwrap();
    let gadget = dir.path().join("gadget.json");
    let report = stdout_json(&hetnet(&[
        "reduce",
        "--graph",
        graph.to_str().unwrap(),
        "--scenario-out",
        gadget.to_str().unwrap(),
    ]));
    assert_eq!(report["active_lpns"], serde_json::json!([0, 2]));
    assert_eq!(report["mis_size"], 2);
    assert_eq!(report["matches_mis"], true);
    assert_eq!(report["bounds_hold"], true);
    assert!(gadget.exists());
}

#[test]
fn errors_exit_nonzero() {
    let missing = hetnet(&["solve", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(missing.status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "carrier_frequency = 900.0\n").unwrap();
    let bad = hetnet(&["generate", "--config", config.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("COST-231-HATA"));
}

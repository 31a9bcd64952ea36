use std::path::Path;
use std::process::Command;

use serde_json::Value;

use psmo_core::milp::{read_lp, solve, SolverOptions};

fn psmo(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_psmo")).args(args).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), json, String::from_utf8(out.stderr).unwrap())
}

fn values(v: &Value) -> Vec<String> {
    v.as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect()
}

fn front(v: &Value) -> Vec<Vec<String>> {
    let mut pts: Vec<Vec<String>> = v["points"].as_array().unwrap().iter().map(|p| values(&p["values"])).collect();
    pts.sort();
    pts
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn check_exit_codes() {
    let (code, v, _) = psmo(&["check", "fig1", "q0", "0.7,0.7"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "achievable");
    assert_eq!(v["strategy"]["actions"]["s1"], "beta");
    assert_eq!(values(&v["values"]), ["7/10", "7/10"]);
    let (code, v, _) = psmo(&["check", "fig1", "q0", "1,4/5"]);
    assert_eq!(code, 1);
    assert_eq!(v["verdict"], "not_achievable");
    let (code, v, err) = psmo(&["check", "fig1", "q7", "1,1"]);
    assert_eq!(code, 2);
    assert_eq!(v["status"], "error");
    assert!(err.contains("unknown query"));
    assert_eq!(psmo(&["check", "fig1", "q0", "1"]).0, 2);
    assert_eq!(psmo(&["check", "no/such/file.json", "q0", "1"]).0, 2);
    assert_eq!(psmo(&["check", "fig1", "q0", "1,1", "--encoding", "fast"]).0, 2);
}

#[test]
fn bounded_memory_checks() {
    let (code, v, _) = psmo(&["check", "fig1", "q0", "1,0.8", "--memory-kind", "goal"]);
    assert_eq!(code, 0);
    assert_eq!(v["strategy"]["kind"], "mealy");
    assert_eq!(v["memory"]["kind"], "goal");
    assert_eq!(values(&v["values"]), ["1", "4/5"]);
    let (code, v, _) = psmo(&["check", "fig5b", "q0", "0.5,0.5", "--memory", "3", "--memory-kind", "counter"]);
    assert_eq!(code, 0);
    assert_eq!(v["strategy"]["memory_states"], 3);
    let (code, v, _) = psmo(&["check", "fig5b", "q0", "0.5,0.5", "--memory", "2", "--memory-kind", "counter"]);
    assert_eq!(code, 1);
    assert_eq!(v["verdict"], "lower_bound_only");
    let (code, v, _) = psmo(&["check", "fig5b", "q0", "0.5,0.5", "--memory", "1", "--memory-kind", "complete"]);
    assert_eq!(code, 1);
    assert_eq!(v["verdict"], "not_achievable");
}

#[test]
fn pareto_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("front");
    let (code, v, _) = psmo(&["pareto", "fig1", "q0", "--eps", "0.01", "--out", stem.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "complete");
    let expected = vec![vec!["0", "1"], vec!["1", "0"], vec!["7/10", "7/10"]];
    assert_eq!(front(&v), expected);
    let (_, o1, _) = psmo(&["oracle", "fig1", "q0"]);
    let (_, o3, _) = psmo(&["--threads", "3", "oracle", "fig1", "q0"]);
    assert_eq!(front(&o1), expected);
    assert_eq!(front(&o3), expected);
    let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    let mut rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.remove(0), "objective_0,objective_1");
    rows.sort();
    assert_eq!(rows, ["0,1", "0.7,0.7", "1,0"]);
    assert!(std::fs::read_to_string(stem.with_extension("dat")).unwrap().starts_with("# objective_0 objective_1"));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap()).unwrap();
    assert_eq!(saved, v);
}

#[test]
fn pareto_time_limit_reports_incomplete() {
    let (code, v, err) = psmo(&["pareto", "fig1", "q0", "--time-limit", "0"]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "incomplete");
    assert!(err.contains("incomplete"));
    let (code, v, _) = psmo(&["pareto", "fig1", "q0", "--eps", "0.05", "--eps-absolute"]);
    assert_eq!(code, 0);
    assert_eq!(values(&v["epsilon"]), ["1/20", "1/20"]);
    assert_eq!(psmo(&["pareto", "fig1", "q0", "--eps", "0"]).0, 2);
}

#[test]
fn oracle_point_verdicts() {
    let (code, v, _) = psmo(&["oracle", "fig1", "q0", "0.7,0.7"]);
    assert_eq!(code, 0);
    assert_eq!(values(&v["values"]), ["7/10", "7/10"]);
    assert_eq!(psmo(&["--threads", "4", "oracle", "fig1", "q0", "0.5,0.9"]).0, 1);
    assert_eq!(psmo(&["oracle", "fig1", "q0", "--cap", "3"]).0, 2);
}

#[test]
fn evaluate_round_trips_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["check", "fig1", "q0", "0.7,0.7"],
        vec!["check", "fig1", "q0", "1,0.8", "--memory-kind", "goal"],
        vec!["check", "fig5b", "q0", "0.25,0.75", "--memory", "4", "--memory-kind", "counter"],
    ] {
        let (code, v, _) = psmo(&args);
        assert_eq!(code, 0, "{args:?}");
        let path = write(dir.path(), "strategy.json", &v["strategy"].to_string());
        let (code, e, _) = psmo(&["evaluate", args[1], &path, "q0"]);
        assert_eq!(code, 0);
        assert_eq!(e["values"], v["values"], "{args:?}");
    }
    let bad = write(dir.path(), "bad.json", r#"{"kind": "stationary", "actions": {"s1": "beta"}}"#);
    assert_eq!(psmo(&["evaluate", "fig1", &bad, "q0"]).0, 2);
}

#[test]
fn generated_models_are_usable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ss.json");
    let (code, _, _) = psmo(&["generate", "subset-sum", "--weights", "3,5,7", "--target", "8", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let model: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let point = values(&model["queries"]["q0"]["points"][0]).join(",");
    assert_eq!(point, "8/15,7/15");
    assert_eq!(psmo(&["check", path.to_str().unwrap(), "q0", &point]).0, 0);
    assert_eq!(psmo(&["check", path.to_str().unwrap(), "q0", "2/15,13/15"]).0, 1);

    let out = Command::new(env!("CARGO_BIN_EXE_psmo")).args(["generate", "random", "--seed", "4", "--states", "4"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let path = write(dir.path(), "random.json", &text);
    let (code, v, _) = psmo(&["oracle", &path, "q0"]);
    assert_eq!(code, 0);
    assert!(!v["points"].as_array().unwrap().is_empty());
    assert_eq!(psmo(&["generate", "subset-sum", "--weights", "3"]).0, 2);
}

#[test]
fn models_are_read_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
        "states": ["s0", "s1"],
        "actions": {
            "s0": [{"label": "alpha", "transitions": {"s0": "1"}}, {"label": "beta", "transitions": {"s1": 1}}],
            "s1": [{"label": "loop", "transitions": {"s1": "1"}}]
        },
        "rewards": {"r": [{"state": "s0", "action": "beta", "value": "1"}]},
        "queries": {
            "max": {"objectives": [{"reward": "r", "relation": ">=", "goal": ["s1"]}]},
            "min": {"objectives": [{"reward": "r", "relation": "<=", "goal": ["s1"]}]}
        }
    }"#;
    let path = write(dir.path(), "m.json", text);
    assert_eq!(psmo(&["check", &path, "max", "1"]).0, 0);
    assert_eq!(psmo(&["check", &path, "max", "1.5"]).0, 1);
    let (code, v, _) = psmo(&["check", &path, "min", "0"]);
    assert_eq!(code, 0);
    assert_eq!(v["strategy"]["actions"]["s0"], "alpha");
    let bad = write(dir.path(), "bad.json", &text.replace(r#""states""#, r#""extra": true, "states""#));
    let (code, v, _) = psmo(&["check", &bad, "max", "1"]);
    assert_eq!(code, 2);
    assert!(v["error"].as_str().unwrap().contains("unknown field"));
}

#[test]
fn exported_lp_is_solvable() {
    let dir = tempfile::tempdir().unwrap();
    for (point, feasible) in [("0.7,0.7", true), ("1,0.8", false)] {
        let lp = dir.path().join("m.lp");
        let (code, _, _) = psmo(&["check", "fig1", "q0", point, "--export-lp", lp.to_str().unwrap(), "--encoding", "base"]);
        assert_eq!(code, if feasible { 0 } else { 1 });
        let model = read_lp(&std::fs::read_to_string(&lp).unwrap()).unwrap();
        assert!(model.variables.iter().any(|v| v.name.starts_with("a_s1_")));
        assert_eq!(solve(&model, &SolverOptions::default()).unwrap().is_feasible(), feasible, "{point}");
    }
}

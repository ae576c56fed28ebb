use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn stubforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stubforge")).args(args).arg("--corpus").arg(corpus()).output().expect("binary runs")
}

fn json_lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).expect("JSON line")).collect()
}

#[test]
fn generate_passes_and_reports() {
    let out = stubforge(&["generate", "--entry", "T1", "--seed", "1009", "--pop", "30", "--max-gen", "10", "--no-timing"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = json_lines(&out);
    assert_eq!(lines.len(), 1);
    let r = &lines[0];
    for field in [
        "entry", "mode", "strategy", "seed", "pop_size", "max_gen", "status", "generations", "evaluations", "wall_seconds", "stub_len",
        "stub", "fitness", "selection_fitness_reads", "series",
    ] {
        assert!(r.get(field).is_some(), "missing {field}");
    }
    assert_eq!(r["status"], "passed");
    assert_eq!(r["mode"], "generate");
    assert_eq!(r["fitness"]["as"], 1.0);
    assert_eq!(r["wall_seconds"], 0.0);
}

#[test]
fn reports_are_reproducible() {
    let args = ["generate", "--entry", "L1", "--seed", "1013", "--pop", "40", "--max-gen", "15", "--no-timing"];
    let a = stubforge(&args);
    let b = stubforge(&[&args[..], &["--threads", "1"]].concat());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exhausted_run_exits_with_two() {
    let out = stubforge(&["generate", "--entry", "M3", "--pop", "4", "--max-gen", "0", "--no-timing"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_lines(&out)[0]["status"], "exhausted");
}

#[test]
fn repair_needs_a_broken_stub() {
    let out = stubforge(&["repair", "--entry", "L1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no broken stub"));

    let out = stubforge(&["repair", "--entry", "S36", "--seed", "1009", "--pop", "50", "--max-gen", "20"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_lines(&out)[0]["mode"], "repair");
}

#[test]
fn unknown_entry_and_strategy_are_errors() {
    assert_eq!(stubforge(&["generate", "--entry", "NOPE"]).status.code(), Some(1));
    assert_ne!(stubforge(&["generate", "--entry", "T1", "--strategy", "greedy"]).status.code(), Some(0));
}

#[test]
fn fidelity_of_ground_truth_is_perfect() {
    let truth = corpus().join("L1/truth.stub");
    let out = stubforge(&["fidelity", "--entry", "L1", "--stub", truth.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &json_lines(&out)[0];
    assert_eq!(r["instruction_jaccard"], 1.0);
    assert_eq!(r["path_similarity"], 1.0);
    assert_eq!(r["killed_jaccard"], 1.0);
    assert!(r["mutants"].as_u64().unwrap() > 0);
}

#[test]
fn fidelity_reports_weak_oracle_divergence() {
    let alt = corpus().join("W4/alternative.stub");
    let out = stubforge(&["fidelity", "--entry", "W4", "--stub", alt.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json_lines(&out)[0]["path_similarity"].as_f64().unwrap() < 1.0);
}

#[test]
fn bench_runs_every_cell_and_summarizes() {
    let dir = std::env::temp_dir().join(format!("stubforge-bench-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let summary = dir.join("summary.json");
    let args = [
        "bench", "--entry", "T1", "--entry", "S36", "--seeds", "1009,1013", "--pop", "20", "--max-gen", "3", "--no-timing", "--summary",
        summary.to_str().unwrap(),
    ];
    let out = stubforge(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    // T1: 3 strategies x 2 seeds; S36: the same in generate and in repair mode
    assert_eq!(json_lines(&out).len(), 6 + 12);
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["rows"].as_array().unwrap().len(), 3 + 6);
    assert_eq!(s["curves"][0]["success_rate"].as_array().unwrap().len(), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("success by budget"));

    let again = stubforge(&args);
    assert_eq!(again.stdout, out.stdout);
    std::fs::remove_dir_all(&dir).ok();
}

//! Runs the quick examples; `cargo test` builds them alongside the tests.

use std::path::PathBuf;
use std::process::Command;

fn example(name: &str) -> PathBuf {
    let deps = std::env::current_exe().unwrap();
    deps.parent().unwrap().parent().unwrap().join("examples").join(name)
}

fn run(name: &str, args: &[&str]) -> String {
    let out = Command::new(example(name))
        .args(args)
        .output()
        .unwrap_or_else(|e| panic!("{name}: {e}; examples are built by a plain `cargo test`"));
    assert!(out.status.success(), "{name} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn quick_examples_run() {
    assert!(run("baseline_bench", &["0.3", "2"]).contains("Ic3"));
    assert!(run("scripted_schedule", &[]).contains("T2 commit"));
    assert!(run("verify_history", &["500"]).matches("serializable").count() == 2);
    assert!(run("graph_reduction", &[]).contains("reduced to"));
    assert!(run("bayes_opt", &[]).contains("best"));
    assert!(run("hot_swap", &[]).contains("torn reads 0, mixed-version transactions 0"));
    assert!(run("zipf_sampling", &[]).contains("rank 9"));
    assert!(run("table_file", &[]).contains("DetectAll"));
    assert!(run("optimize_ycsb", &["2", "2"]).contains("evaluations"));
}

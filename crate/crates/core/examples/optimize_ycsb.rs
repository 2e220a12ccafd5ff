//! Runs the offline optimizer from the IC3 function on YCSB and compares
//! the learned function to where it started.
//!
//!     cargo run --release --example optimize_ycsb -- [budget_seconds] [threads]

use std::sync::Arc;
use std::time::Duration;

use learned_cc::cli::{baseline_function, preset, Baseline};
use learned_cc::engine::Mode;
use learned_cc::executor::{evaluate_score, Engine, RunConfig};
use learned_cc::optimizer::{run_pipeline, PipelineConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let budget: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let threads: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(4);

    let w = preset("ycsb1").unwrap().build();
    let statics = w.static_ops();
    let initial = baseline_function(&statics, Baseline::Ic3);
    let engine = Arc::new(Engine::for_workload(w.as_ref(), initial.clone()));
    let eval = RunConfig {
        mode: Mode::StoredProcedure,
        ..RunConfig::timed(threads, Duration::from_millis(50), Duration::from_millis(250))
    };
    let res = run_pipeline(&statics, initial, &PipelineConfig::with_budget(Duration::from_secs(budget)), &mut |f| {
        evaluate_score(&engine, &w, f.clone(), &eval).throughput
    });
    println!(
        "{} evaluations; initial {:.0} txn/s, best {:.0} txn/s (found at {:.1}s); stages completed {:?}",
        res.records.len(),
        res.initial_score,
        res.best_score,
        res.time_to_best,
        res.stages_completed
    );
    print!("{}", res.log.to_csv().lines().take(6).collect::<Vec<_>>().join("\n"));
    println!("\n...");
}

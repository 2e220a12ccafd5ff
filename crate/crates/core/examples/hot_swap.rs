//! Replaces the active function every few milliseconds while workers run,
//! then reports the engine's consistency counters.

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use learned_cc::cli::{baseline_function, preset, Baseline};
use learned_cc::executor::{run, Engine, RunConfig};

fn main() {
    let w = preset("ycsb1").unwrap().build();
    let statics = w.static_ops();
    let pool: Vec<_> = [Baseline::Ic3, Baseline::Occ, Baseline::TwoPl]
        .into_iter()
        .map(|b| baseline_function(&statics, b))
        .collect();
    let engine = Arc::new(Engine::for_workload(w.as_ref(), pool[0].clone()).with_checksums());
    let (e, wl) = (Arc::clone(&engine), Arc::clone(&w));
    let load = thread::spawn(move || run(&e, &wl, &RunConfig::timed(8, Duration::ZERO, Duration::from_secs(2))));
    let mut swaps = 0;
    while !load.is_finished() {
        thread::sleep(Duration::from_millis(10));
        let version = engine.swap_active(pool[swaps % pool.len()].clone());
        swaps += 1;
        if swaps % 50 == 0 {
            println!("swap {swaps}: active version {version}");
        }
    }
    let report = load.join().unwrap();
    let stats = engine.stats.snapshot();
    println!(
        "{swaps} swaps, {} commits, torn reads {}, mixed-version transactions {}",
        report.score.commits, stats.torn_functions, stats.mixed_versions
    );
}

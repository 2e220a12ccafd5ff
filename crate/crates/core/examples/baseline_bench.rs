//! Throughput of the four classic protocols, all expressed as agent
//! functions, on the YCSB high-contention pattern.
//!
//!     cargo run --release --example baseline_bench -- [seconds] [threads]

use std::sync::Arc;
use std::time::Duration;

use learned_cc::cli::{baseline_function, preset, Baseline};
use learned_cc::executor::{run, Engine, RunConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let secs: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(2.0);
    let threads: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(4);

    let w = preset("ycsb1").unwrap().build();
    let statics = w.static_ops();
    let cfg = RunConfig::timed(threads, Duration::from_secs_f64(secs / 4.0), Duration::from_secs_f64(secs));
    println!("protocol  throughput  abort_rate");
    for b in [Baseline::Occ, Baseline::TwoPl, Baseline::Ic3, Baseline::Asocc] {
        let engine = Arc::new(Engine::for_workload(w.as_ref(), baseline_function(&statics, b)));
        let r = run(&engine, &w, &cfg).score;
        println!("{:<8}  {:>10.0}  {:>10.3}", format!("{b:?}"), r.throughput, r.abort_rate);
    }
}

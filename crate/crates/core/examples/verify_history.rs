//! Records a full history under a random-looking workload and checks it
//! with the serializability oracle.

use std::sync::Arc;

use learned_cc::cli::{baseline_function, preset, Baseline};
use learned_cc::executor::{run, Engine, RunConfig};
use learned_cc::oracle::{check_serializable, RecordLevel};

fn main() {
    let txns: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5000);
    for name in ["ycsb2", "tpcc"] {
        let w = preset(name).unwrap().build();
        let f = baseline_function(&w.static_ops(), Baseline::Ic3);
        let engine = Arc::new(Engine::for_workload(w.as_ref(), f).with_recording(RecordLevel::Full));
        let report = run(&engine, &w, &RunConfig::counted(4, txns, 3));
        let history = engine.take_history();
        match check_serializable(&history) {
            Ok(()) => println!("{name}: {} committed, {} aborted, serializable", history.txns.len(), report.score.aborts),
            Err(e) => println!("{name}: NOT serializable: {e}"),
        }
    }
}

//! Shifts the thread count between phases, lets the drift detector notice,
//! and reoptimizes from scratch on each trigger. Short settings by default.

use std::time::Duration;

use learned_cc::cli::{baseline_function, preset, Baseline};
use learned_cc::executor::RunConfig;
use learned_cc::optimizer::{run_drift_demo, DriftConfig, DriftDemoConfig, PipelineConfig};

fn main() {
    let w = preset("ycsb1").unwrap().build();
    let cfg = DriftDemoConfig {
        phases: vec![1, 16, 4],
        windows_per_phase: 6,
        drift: DriftConfig {
            window: Duration::from_millis(400),
            half_life: Duration::from_millis(800),
            ..DriftConfig::default()
        },
        pipeline: PipelineConfig::with_budget(Duration::from_secs(5)),
        eval: RunConfig::timed(1, Duration::from_millis(30), Duration::from_millis(120)),
    };
    let report = run_drift_demo(&w, baseline_function(&w.static_ops(), Baseline::Ic3), &cfg);
    for line in &report.log {
        println!("{line}");
    }
    for (phase, window, tp) in &report.windows {
        println!("phase {phase} window {window}: {tp:.0} txn/s");
    }
}

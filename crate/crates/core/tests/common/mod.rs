#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use learned_cc::agent::{Action, AgentFunction, DetectionMode, INFINITE_TIMEOUT};
use learned_cc::engine::{Key, Mode, OpType};
use learned_cc::executor::{Engine, RunConfig};
use learned_cc::features::{default_selector, StateKey};
use learned_cc::workload::{OpSpec, StaticWorkload, TxnRequest, Workload, Ycsb, YcsbConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `LEARNED_CC_FULL=1` runs criteria at their stated scale.
pub fn full_scale() -> bool {
    std::env::var("LEARNED_CC_FULL").is_ok_and(|v| v == "1")
}

pub fn random_action(rng: &mut ChaCha8Rng, op_counts: &[u32]) -> Action {
    let detection = DetectionMode::ALL[rng.gen_range(0..3)];
    let timeout_us = match rng.gen_range(0..4) {
        0 => 0.0,
        1 => INFINITE_TIMEOUT,
        _ => rng.gen_range(1.0..2000.0),
    };
    Action {
        detection,
        timeout_us,
        priority: rng.gen(),
        waits: op_counts.iter().map(|&n| rng.gen_range(0..=n)).collect(),
        expose: rng.gen(),
    }
}

/// Every row of the default selector filled with a random action.
pub fn random_function(statics: &StaticWorkload, rng: &mut ChaCha8Rng) -> AgentFunction {
    let sel = Arc::new(default_selector(statics.n_types() as u16, statics.max_ops()));
    let counts = statics.op_counts();
    let mut f = AgentFunction::new(Arc::clone(&sel), statics.n_types());
    f.set_default(random_action(rng, &counts));
    for k in 0..sel.cardinality() {
        f.set_row(StateKey(k), random_action(rng, &counts));
    }
    for t in 0..statics.n_types() {
        f.set_backoff(t, rng.gen_range(0.0..20.0));
    }
    f
}

pub fn ycsb(pattern: usize, keys: u64) -> Arc<dyn Workload> {
    Arc::new(Ycsb::new(YcsbConfig::pattern(pattern).with_keys(keys)))
}

/// One-type YCSB store whose transactions are `ops`, for scripted schedules.
pub fn scripted_workload(ops: &[OpType]) -> Arc<dyn Workload> {
    Arc::new(Ycsb::new(YcsbConfig {
        pattern: vec![false; ops.len()],
        read_write: ops.to_vec(),
        n_keys: 16,
        theta_hot: 1.0,
        theta_cold: 0.0,
    }))
}

pub fn key(row: u64) -> Key {
    Key::new(0, row)
}

pub fn request(ops: &[(OpType, u64)], seed: u64) -> TxnRequest {
    TxnRequest {
        txn_type: 0,
        ops: ops
            .iter()
            .map(|&(op_type, row)| OpSpec { key: key(row), op_type })
            .collect(),
        seed,
    }
}

pub fn engine(w: &Arc<dyn Workload>, f: AgentFunction) -> Arc<Engine> {
    Arc::new(Engine::for_workload(w.as_ref(), f))
}

pub fn timed(threads: usize, warmup_ms: u64, measure_ms: u64, mode: Mode) -> RunConfig {
    RunConfig {
        mode,
        ..RunConfig::timed(
            threads,
            Duration::from_millis(warmup_ms),
            Duration::from_millis(measure_ms),
        )
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

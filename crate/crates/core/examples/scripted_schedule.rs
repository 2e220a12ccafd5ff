//! Two transactions on the same two keys, stepped by hand, under three
//! agent functions. Shows validation failure, blocking, and pipelined
//! dirty reads.

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use learned_cc::agent::{encode_occ, Action, AgentFunction, DetectionMode, FIFO_PRIORITY, INFINITE_TIMEOUT};
use learned_cc::engine::{Key, Mode, OpType};
use learned_cc::executor::{Engine, ExecOutcome};
use learned_cc::features::default_selector;
use learned_cc::graph::encode_ic3;
use learned_cc::workload::{OpSpec, TxnRequest, Workload, Ycsb, YcsbConfig};

fn txn(seed: u64) -> TxnRequest {
    let op = |op_type, row| OpSpec { key: Key::new(0, row), op_type };
    TxnRequest {
        txn_type: 0,
        ops: vec![op(OpType::Read, 1), op(OpType::Write, 1), op(OpType::Read, 2), op(OpType::Write, 2)],
        seed,
    }
}

fn show(label: &str, out: &ExecOutcome) {
    match out {
        ExecOutcome::Succeed(Some(v)) => println!("  {label}: read version written by txn {}", v.writer.0),
        ExecOutcome::Succeed(None) => println!("  {label}: ok"),
        ExecOutcome::Abort(r) => println!("  {label}: abort ({r:?})"),
    }
}

fn interleave(name: &str, f: AgentFunction, w: &Ycsb) {
    println!("{name}");
    let e = Engine::for_workload(w, f);
    thread::scope(|s| {
        let mut t1 = e.begin(txn(1), Mode::StoredProcedure);
        show("T1 read A", &t1.execute_next());
        show("T1 write A", &t1.execute_next());
        let t2 = s.spawn(|| {
            let mut t2 = e.begin(txn(2), Mode::StoredProcedure);
            let mut log = Vec::new();
            while t2.has_next() {
                let out = t2.execute_next();
                let abort = out.is_abort();
                log.push(out);
                if abort {
                    return (log, None);
                }
            }
            (log, Some(t2.commit()))
        });
        thread::sleep(Duration::from_millis(20));
        show("T1 read B", &t1.execute_next());
        show("T1 write B", &t1.execute_next());
        println!("  T1 commit: {:?}", t1.commit());
        let (log, commit) = t2.join().unwrap();
        for (i, out) in log.iter().enumerate() {
            show(&format!("T2 op {i}"), out);
        }
        println!("  T2 commit: {commit:?}");
    });
}

fn main() {
    let w = Ycsb::new(YcsbConfig {
        pattern: vec![false; 4],
        read_write: vec![OpType::Read, OpType::Write, OpType::Read, OpType::Write],
        n_keys: 16,
        theta_hot: 1.0,
        theta_cold: 0.0,
    });
    let statics = w.static_ops();
    let sel = Arc::new(default_selector(1, 4));
    interleave("no detection (OCC)", encode_occ(Arc::clone(&sel), 1), &w);
    let block = Action::new(DetectionMode::DetectAll, INFINITE_TIMEOUT, FIFO_PRIORITY, 1);
    interleave("detect all, wait forever", AgentFunction::uniform(Arc::clone(&sel), 1, block), &w);
    interleave("detect critical, pipelined (IC3)", encode_ic3(sel, &statics), &w);
}

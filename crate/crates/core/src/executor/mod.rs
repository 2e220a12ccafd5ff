//! Learned execution and validation over the engine, plus the worker-thread
//! harness that measures an agent function's score.

mod ctx;
mod harness;

pub use ctx::{AbortReason, ExecOutcome, TxnCtx};
pub use harness::{
    evaluate_score, run, run_transaction, RunConfig, RunReport, ScoreReport, TypeScore,
};

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;

use crate::agent::{ActiveFunction, AgentFunction};
use crate::engine::{Mode, Store};
use crate::oracle::{History, RecordLevel, Recorder};
use crate::workload::{load_store, StaticWorkload, TxnRequest, Workload};

/// Monotone counters shared by all workers.
#[derive(Debug)]
pub struct EngineStats {
    pub commits: AtomicU64,
    pub aborts: AtomicU64,
    pub type_commits: Vec<AtomicU64>,
    pub type_aborts: Vec<AtomicU64>,
    pub abort_reasons: [AtomicU64; AbortReason::COUNT],
    /// Waits that actually blocked (detect-all or pipeline).
    pub wait_events: AtomicU64,
    pub dirty_reads: AtomicU64,
    pub dirty_appends: AtomicU64,
    pub expose_events: AtomicU64,
    pub backoff_sleeps: AtomicU64,
    /// Transactions whose pinned function did not match the checksum
    /// registered for its version.
    pub torn_functions: AtomicU64,
    /// Transactions that observed actions from more than one version.
    pub mixed_versions: AtomicU64,
}

/// Plain copy of [`EngineStats`] at one instant.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StatsSnapshot {
    pub commits: u64,
    pub aborts: u64,
    pub type_commits: Vec<u64>,
    pub type_aborts: Vec<u64>,
    pub abort_reasons: Vec<u64>,
    pub wait_events: u64,
    pub dirty_reads: u64,
    pub dirty_appends: u64,
    pub expose_events: u64,
    pub backoff_sleeps: u64,
    pub torn_functions: u64,
    pub mixed_versions: u64,
}

impl EngineStats {
    fn new(n_types: usize) -> Self {
        EngineStats {
            commits: AtomicU64::new(0),
            aborts: AtomicU64::new(0),
            type_commits: (0..n_types).map(|_| AtomicU64::new(0)).collect(),
            type_aborts: (0..n_types).map(|_| AtomicU64::new(0)).collect(),
            abort_reasons: Default::default(),
            wait_events: AtomicU64::new(0),
            dirty_reads: AtomicU64::new(0),
            dirty_appends: AtomicU64::new(0),
            expose_events: AtomicU64::new(0),
            backoff_sleeps: AtomicU64::new(0),
            torn_functions: AtomicU64::new(0),
            mixed_versions: AtomicU64::new(0),
        }
    }

    pub fn snapshot(&self) -> StatsSnapshot {
        let ld = |a: &AtomicU64| a.load(Ordering::Relaxed);
        StatsSnapshot {
            commits: ld(&self.commits),
            aborts: ld(&self.aborts),
            type_commits: self.type_commits.iter().map(ld).collect(),
            type_aborts: self.type_aborts.iter().map(ld).collect(),
            abort_reasons: self.abort_reasons.iter().map(ld).collect(),
            wait_events: ld(&self.wait_events),
            dirty_reads: ld(&self.dirty_reads),
            dirty_appends: ld(&self.dirty_appends),
            expose_events: ld(&self.expose_events),
            backoff_sleeps: ld(&self.backoff_sleeps),
            torn_functions: ld(&self.torn_functions),
            mixed_versions: ld(&self.mixed_versions),
        }
    }
}

impl StatsSnapshot {
    /// Component-wise `self - earlier`.
    pub fn since(&self, earlier: &StatsSnapshot) -> StatsSnapshot {
        let sub = |a: &[u64], b: &[u64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        StatsSnapshot {
            commits: self.commits - earlier.commits,
            aborts: self.aborts - earlier.aborts,
            type_commits: sub(&self.type_commits, &earlier.type_commits),
            type_aborts: sub(&self.type_aborts, &earlier.type_aborts),
            abort_reasons: sub(&self.abort_reasons, &earlier.abort_reasons),
            wait_events: self.wait_events - earlier.wait_events,
            dirty_reads: self.dirty_reads - earlier.dirty_reads,
            dirty_appends: self.dirty_appends - earlier.dirty_appends,
            expose_events: self.expose_events - earlier.expose_events,
            backoff_sleeps: self.backoff_sleeps - earlier.backoff_sleeps,
            torn_functions: self.torn_functions - earlier.torn_functions,
            mixed_versions: self.mixed_versions - earlier.mixed_versions,
        }
    }
}

/// A loaded store, the active agent function and the run-wide counters.
pub struct Engine {
    pub store: Store,
    active: ActiveFunction,
    statics: StaticWorkload,
    next_ts: AtomicU64,
    pub stats: EngineStats,
    recorder: Recorder,
    checksums: Option<Mutex<HashMap<u64, u64>>>,
}

impl Engine {
    pub fn new(store: Store, statics: StaticWorkload, f: AgentFunction) -> Self {
        let n = statics.n_types();
        Engine {
            store,
            active: ActiveFunction::new(f),
            statics,
            next_ts: AtomicU64::new(1),
            stats: EngineStats::new(n),
            recorder: Recorder::new(RecordLevel::Off),
            checksums: None,
        }
    }

    /// Loads `w`'s tables and installs `f`.
    pub fn for_workload(w: &dyn Workload, f: AgentFunction) -> Self {
        Engine::new(load_store(w), w.static_ops(), f)
    }

    /// Enables history recording; snapshots the store as the replay origin.
    pub fn with_recording(mut self, level: RecordLevel) -> Self {
        self.recorder = Recorder::new(level);
        if level == RecordLevel::Full {
            self.recorder.set_initial(
                self.store
                    .snapshot()
                    .into_iter()
                    .map(|(k, v)| (k, v.payload.clone()))
                    .collect(),
            );
        }
        self
    }

    /// Registers a checksum per installed function version and verifies
    /// every transaction's pinned function against it.
    pub fn with_checksums(mut self) -> Self {
        let mut m = HashMap::new();
        let f = self.active.pin();
        m.insert(f.version(), f.checksum());
        self.checksums = Some(Mutex::new(m));
        self
    }

    pub fn statics(&self) -> &StaticWorkload {
        &self.statics
    }

    pub fn n_types(&self) -> usize {
        self.statics.n_types()
    }

    pub fn recorder(&self) -> &Recorder {
        &self.recorder
    }

    pub fn active(&self) -> Arc<AgentFunction> {
        self.active.pin()
    }

    pub fn active_version(&self) -> u64 {
        self.active.version()
    }

    /// Installs `f` for transactions that begin from now on; returns the
    /// version it received.
    pub fn swap_active(&self, f: AgentFunction) -> u64 {
        match &self.checksums {
            Some(m) => {
                let cs = f.checksum();
                let mut m = m.lock();
                let v = self.active.swap_active(f) + 1;
                m.insert(v, cs);
                v
            }
            None => self.active.swap_active(f) + 1,
        }
    }

    pub(crate) fn verify_pinned(&self, f: &AgentFunction) {
        if let Some(m) = &self.checksums {
            let expect = m.lock().get(&f.version()).copied();
            if expect != Some(f.checksum()) {
                self.stats.torn_functions.fetch_add(1, Ordering::Relaxed);
            }
        }
    }

    pub fn next_timestamp(&self) -> u64 {
        self.next_ts.fetch_add(1, Ordering::SeqCst)
    }

    /// Starts a transaction attempt with a fresh timestamp.
    pub fn begin(&self, req: TxnRequest, mode: Mode) -> TxnCtx<'_> {
        let ts = self.next_timestamp();
        TxnCtx::new(self, req, mode, ts)
    }

    /// Starts an attempt that keeps the timestamp of an earlier one.
    pub fn begin_with_ts(&self, req: TxnRequest, mode: Mode, ts: u64) -> TxnCtx<'_> {
        TxnCtx::new(self, req, mode, ts)
    }

    /// Drains the recorded history, attaching the final committed state.
    pub fn take_history(&self) -> History {
        let final_state = (self.recorder.level() == RecordLevel::Full).then(|| {
            self.store
                .snapshot()
                .into_iter()
                .map(|(k, v)| (k, v.id(), v.payload.clone()))
                .collect()
        });
        self.recorder.take(final_state)
    }
}

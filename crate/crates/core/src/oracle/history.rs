use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::Mutex;

use crate::engine::{Key, Payload, TxnId, VersionId};
use crate::workload::OpSpec;

/// How much of each committed transaction the engine records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RecordLevel {
    Off,
    /// Identity, serialization number and dependencies only.
    DepsOnly,
    /// Everything the replay check needs.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReadRecord {
    pub op_index: u32,
    pub key: Key,
    pub version: VersionId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WriteRecord {
    pub op_index: u32,
    pub key: Key,
    pub wseq: u32,
    pub payload: Payload,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TxnRecord {
    pub id: TxnId,
    pub txn_type: u16,
    pub seed: u64,
    /// Serialization number taken at the commit lock point.
    pub seq: u64,
    pub ops: Vec<OpSpec>,
    pub reads: Vec<ReadRecord>,
    pub writes: Vec<WriteRecord>,
    /// `(dependency, read_from)` as held at commit.
    pub deps: Vec<(TxnId, bool)>,
    /// Version of the agent function the transaction ran under.
    pub fn_version: u64,
}

/// Committed transactions of one run plus the store before and after.
#[derive(Clone, Debug, Default)]
pub struct History {
    pub level: Option<RecordLevel>,
    pub initial: Vec<(Key, Payload)>,
    pub txns: Vec<TxnRecord>,
    pub final_state: Option<Vec<(Key, VersionId, Payload)>>,
    pub aborted_attempts: u64,
}

impl History {
    /// Line-oriented dump for failure triage.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "history level={:?} committed={} aborted_attempts={}",
            self.level,
            self.txns.len(),
            self.aborted_attempts
        );
        let mut txns: Vec<&TxnRecord> = self.txns.iter().collect();
        txns.sort_by_key(|t| t.seq);
        for t in txns {
            let _ = writeln!(
                s,
                "txn {} type={} seq={} seed={:#x} fn=v{}",
                t.id, t.txn_type, t.seq, t.seed, t.fn_version
            );
            for r in &t.reads {
                let _ = writeln!(s, "  r#{} {} <- {}", r.op_index, r.key, r.version);
            }
            for w in &t.writes {
                let _ = writeln!(s, "  w#{} {} = {:016x} (#{})", w.op_index, w.key, w.payload.as_u64(), w.wseq);
            }
            for (d, rf) in &t.deps {
                let _ = writeln!(s, "  dep {d}{}", if *rf { " read-from" } else { "" });
            }
        }
        s
    }
}

/// Thread-safe collector the executor appends to at commit.
pub struct Recorder {
    level: RecordLevel,
    shards: Vec<Mutex<Vec<TxnRecord>>>,
    aborted: AtomicU64,
    initial: Mutex<Vec<(Key, Payload)>>,
}

const SHARDS: usize = 16;

impl Recorder {
    pub fn new(level: RecordLevel) -> Self {
        Recorder {
            level,
            shards: (0..SHARDS).map(|_| Mutex::new(Vec::new())).collect(),
            aborted: AtomicU64::new(0),
            initial: Mutex::new(Vec::new()),
        }
    }

    pub fn level(&self) -> RecordLevel {
        self.level
    }

    pub fn enabled(&self) -> bool {
        self.level != RecordLevel::Off
    }

    pub fn set_initial(&self, initial: Vec<(Key, Payload)>) {
        *self.initial.lock() = initial;
    }

    pub fn push(&self, rec: TxnRecord) {
        self.shards[rec.id.0 as usize % SHARDS].lock().push(rec);
    }

    pub fn note_abort(&self) {
        self.aborted.fetch_add(1, Ordering::Relaxed);
    }

    /// Drains everything recorded so far.
    pub fn take(&self, final_state: Option<Vec<(Key, VersionId, Payload)>>) -> History {
        let mut txns = Vec::new();
        for s in &self.shards {
            txns.append(&mut s.lock());
        }
        txns.sort_by_key(|t| t.seq);
        History {
            level: Some(self.level),
            initial: self.initial.lock().clone(),
            txns,
            final_state,
            aborted_attempts: self.aborted.swap(0, Ordering::Relaxed),
        }
    }
}

use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU8, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::{Condvar, Mutex};

use super::key::{Key, TxnId};
use super::version::{Payload, Version, VersionId};
use crate::agent::AgentFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpType {
    Read,
    Write,
}

impl OpType {
    pub fn is_write(self) -> bool {
        matches!(self, OpType::Write)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    StoredProcedure,
    Interactive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TxnStatus {
    Running,
    Committed,
    Aborted,
}

impl TxnStatus {
    fn from_u8(v: u8) -> Self {
        match v {
            0 => TxnStatus::Running,
            1 => TxnStatus::Committed,
            _ => TxnStatus::Aborted,
        }
    }

    fn as_u8(self) -> u8 {
        match self {
            TxnStatus::Running => 0,
            TxnStatus::Committed => 1,
            TxnStatus::Aborted => 2,
        }
    }
}

/// One data access of a transaction.
#[derive(Clone, Debug, PartialEq)]
pub struct Operation {
    pub tx: TxnId,
    pub key: Key,
    pub op_type: OpType,
    /// 1-based position within the transaction.
    pub op_index: u32,
    pub clean: bool,
    pub priority: f32,
}

/// Outcome of a bounded wait on another transaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaitOutcome {
    Ready,
    TimedOut,
    /// The wait-for chain starting at the target leads back to the waiter.
    Cycle,
    /// The waiter was marked for cascading abort while waiting.
    Doomed,
}

const UNSET_PRIORITY: u32 = u32::MAX;
const SWEEP: Duration = Duration::from_micros(100);
const MAX_CHAIN_HOPS: usize = 64;

/// The part of a transaction other threads can observe.
pub struct TxnShared {
    pub id: TxnId,
    pub txn_type: u16,
    /// Start-order stamp; kept across retries of the same logical transaction.
    pub timestamp: u64,
    status: AtomicU8,
    progress: AtomicU32,
    doomed: AtomicBool,
    settled: AtomicBool,
    dependents: AtomicU32,
    op_priority: Box<[AtomicU32]>,
    read_from_me: Mutex<Vec<Arc<TxnShared>>>,
    waits_on: Mutex<Option<Arc<TxnShared>>>,
    parked: AtomicU32,
    signal: Mutex<()>,
    cond: Condvar,
}

impl std::fmt::Debug for TxnShared {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TxnShared")
            .field("id", &self.id)
            .field("type", &self.txn_type)
            .field("ts", &self.timestamp)
            .field("status", &self.status())
            .field("progress", &self.progress())
            .finish()
    }
}

impl TxnShared {
    pub fn new(id: TxnId, txn_type: u16, timestamp: u64, n_ops: usize) -> Self {
        TxnShared {
            id,
            txn_type,
            timestamp,
            status: AtomicU8::new(TxnStatus::Running.as_u8()),
            progress: AtomicU32::new(0),
            doomed: AtomicBool::new(false),
            settled: AtomicBool::new(false),
            dependents: AtomicU32::new(0),
            op_priority: (0..n_ops).map(|_| AtomicU32::new(UNSET_PRIORITY)).collect(),
            read_from_me: Mutex::new(Vec::new()),
            waits_on: Mutex::new(None),
            parked: AtomicU32::new(0),
            signal: Mutex::new(()),
            cond: Condvar::new(),
        }
    }

    pub fn status(&self) -> TxnStatus {
        TxnStatus::from_u8(self.status.load(Ordering::SeqCst))
    }

    pub fn is_finished(&self) -> bool {
        self.status() != TxnStatus::Running
    }

    /// Finished, and its committed versions are installed or its dirty
    /// versions removed, and it no longer appears among tuple holders.
    pub fn is_settled(&self) -> bool {
        self.settled.load(Ordering::SeqCst)
    }

    /// Number of operations this transaction has fully executed.
    pub fn progress(&self) -> u32 {
        self.progress.load(Ordering::SeqCst)
    }

    pub fn is_doomed(&self) -> bool {
        self.doomed.load(Ordering::Relaxed)
    }

    pub fn doom(&self) {
        self.doomed.store(true, Ordering::Relaxed);
        self.notify();
    }

    /// Operation count declared at begin.
    pub fn n_ops(&self) -> u32 {
        self.op_priority.len() as u32
    }

    pub fn dependents(&self) -> u32 {
        self.dependents.load(Ordering::Relaxed)
    }

    pub fn add_dependent(&self) {
        self.dependents.fetch_add(1, Ordering::Relaxed);
    }

    /// Priority recorded for the 1-based operation `op_index`; `None` if the
    /// operation has not executed yet.
    pub fn op_priority(&self, op_index: u32) -> Option<f32> {
        let slot = self.op_priority.get(op_index.checked_sub(1)? as usize)?;
        match slot.load(Ordering::Relaxed) {
            UNSET_PRIORITY => None,
            bits => Some(f32::from_bits(bits)),
        }
    }

    pub fn set_op_priority(&self, op_index: u32, p: f32) {
        if let Some(slot) = op_index
            .checked_sub(1)
            .and_then(|i| self.op_priority.get(i as usize))
        {
            slot.store(p.to_bits(), Ordering::Relaxed);
        }
    }

    pub fn advance_progress(&self, executed: u32) {
        self.progress.store(executed, Ordering::SeqCst);
        self.notify();
    }

    /// Registers `reader` as having read dirty data written by `self`, so an
    /// abort of `self` can doom it eagerly.
    pub fn add_dirty_reader(&self, reader: Arc<TxnShared>) {
        let mut readers = self.read_from_me.lock();
        if self.status() == TxnStatus::Aborted {
            reader.doom();
            return;
        }
        if !readers.iter().any(|r| r.id == reader.id) {
            readers.push(reader);
        }
    }

    /// Sets the final status, dooms dirty readers on abort and wakes waiters.
    pub fn finish(&self, status: TxnStatus) {
        debug_assert_ne!(status, TxnStatus::Running);
        let prev = self.status.swap(status.as_u8(), Ordering::SeqCst);
        debug_assert_eq!(TxnStatus::from_u8(prev), TxnStatus::Running);
        let readers = std::mem::take(&mut *self.read_from_me.lock());
        if status == TxnStatus::Aborted {
            for r in &readers {
                r.doom();
            }
        }
        *self.waits_on.lock() = None;
        self.notify();
    }

    pub fn settle(&self) {
        debug_assert!(self.is_finished());
        self.settled.store(true, Ordering::SeqCst);
        self.notify();
    }

    fn notify(&self) {
        if self.parked.load(Ordering::SeqCst) > 0 {
            let _g = self.signal.lock();
            self.cond.notify_all();
        }
    }

    fn reaches(&self, me: TxnId) -> bool {
        let mut cur = self.waits_on.lock().clone();
        for _ in 0..MAX_CHAIN_HOPS {
            match cur {
                None => return false,
                Some(t) if t.id == me => return true,
                Some(t) => cur = t.waits_on.lock().clone(),
            }
        }
        false
    }

    /// Blocks `me` until `ready(target)` holds, `deadline` passes, `me` is
    /// doomed, or waiting would close a wait-for cycle.
    ///
    /// The wait spins briefly, then parks on the target's condition variable
    /// with a periodic sweep that re-checks the deadline and the wait-for
    /// chain. `deadline == None` waits without a time bound.
    pub fn wait_for(
        me: &Arc<TxnShared>,
        target: &Arc<TxnShared>,
        deadline: Option<Instant>,
        ready: impl Fn(&TxnShared) -> bool,
    ) -> WaitOutcome {
        if ready(target) {
            return WaitOutcome::Ready;
        }
        for spin in 0..4u32 {
            for _ in 0..(1u32 << spin) {
                std::hint::spin_loop();
            }
            std::thread::yield_now();
            if ready(target) {
                return WaitOutcome::Ready;
            }
        }
        *me.waits_on.lock() = Some(Arc::clone(target));
        let outcome = loop {
            if ready(target) {
                break WaitOutcome::Ready;
            }
            if me.is_doomed() {
                break WaitOutcome::Doomed;
            }
            let now = Instant::now();
            if deadline.is_some_and(|d| now >= d) {
                break WaitOutcome::TimedOut;
            }
            if target.id == me.id || target.reaches(me.id) {
                break WaitOutcome::Cycle;
            }
            let wake = deadline.map_or(now + SWEEP, |d| d.min(now + SWEEP));
            target.parked.fetch_add(1, Ordering::SeqCst);
            {
                let mut g = target.signal.lock();
                if !ready(target) && !me.is_doomed() {
                    target.cond.wait_until(&mut g, wake);
                }
            }
            target.parked.fetch_sub(1, Ordering::SeqCst);
        };
        *me.waits_on.lock() = None;
        outcome
    }

    /// Current wait-for target, if the transaction is parked.
    pub fn waiting_on(&self) -> Option<TxnId> {
        self.waits_on.lock().as_ref().map(|t| t.id)
    }
}

#[derive(Clone, Debug)]
pub struct ReadEntry {
    pub key: Key,
    pub version: Arc<Version>,
}

#[derive(Clone, Debug)]
pub struct WriteEntry {
    pub key: Key,
    pub payload: Payload,
    pub wseq: u32,
    /// `wseq` of the dirty version currently exposed on the chain, if any.
    pub exposed: Option<u32>,
}

#[derive(Clone, Debug)]
pub struct DepEntry {
    pub txn: Arc<TxnShared>,
    /// True when this transaction read dirty data written by `txn`; false for
    /// ordering-only (anti-)dependencies.
    pub read_from: bool,
}

/// Thread-local runtime state of one transaction attempt.
pub struct Transaction {
    pub shared: Arc<TxnShared>,
    pub mode: Mode,
    /// Agent function pinned at begin; used for every operation.
    pub function: Arc<AgentFunction>,
    pub rs: Vec<ReadEntry>,
    pub ws: Vec<WriteEntry>,
    pub dep: Vec<DepEntry>,
    /// Indices into `rs` not yet early-validated.
    pub validate: Vec<usize>,
    /// Keys on which this transaction registered as an accessor.
    pub touched: Vec<Key>,
    /// Keys on which this transaction is listed as a dirty reader.
    pub dirty_read_keys: Vec<Key>,
    pub executed: u32,
    pub expose_count: u32,
}

impl Transaction {
    pub fn new(shared: Arc<TxnShared>, mode: Mode, function: Arc<AgentFunction>) -> Self {
        Transaction {
            shared,
            mode,
            function,
            rs: Vec::new(),
            ws: Vec::new(),
            dep: Vec::new(),
            validate: Vec::new(),
            touched: Vec::new(),
            dirty_read_keys: Vec::new(),
            executed: 0,
            expose_count: 0,
        }
    }

    pub fn id(&self) -> TxnId {
        self.shared.id
    }

    pub fn status(&self) -> TxnStatus {
        self.shared.status()
    }

    pub fn write_entry(&self, key: Key) -> Option<&WriteEntry> {
        self.ws.iter().find(|w| w.key == key)
    }

    /// Adds `other` to `dep`; a second add upgrades to `read_from` when asked.
    /// Returns false for self-dependencies, which are never recorded.
    pub fn add_dep(&mut self, other: &Arc<TxnShared>, read_from: bool) -> bool {
        if other.id == self.shared.id {
            return false;
        }
        if let Some(d) = self.dep.iter_mut().find(|d| d.txn.id == other.id) {
            d.read_from |= read_from;
            return true;
        }
        other.add_dependent();
        self.dep.push(DepEntry {
            txn: Arc::clone(other),
            read_from,
        });
        true
    }

    pub fn read_identities(&self) -> impl Iterator<Item = (Key, VersionId)> + '_ {
        self.rs.iter().map(|r| (r.key, r.version.id()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    fn shared(id: u64) -> Arc<TxnShared> {
        Arc::new(TxnShared::new(TxnId(id), 0, id, 4))
    }

    #[test]
    fn wait_returns_when_target_finishes() {
        let me = shared(1);
        let target = shared(2);
        let t2 = Arc::clone(&target);
        let h = thread::spawn(move || {
            thread::sleep(Duration::from_millis(5));
            t2.finish(TxnStatus::Committed);
        });
        let out = TxnShared::wait_for(&me, &target, None, |t| t.is_finished());
        h.join().unwrap();
        assert_eq!(out, WaitOutcome::Ready);
        assert_eq!(me.waiting_on(), None);
    }

    #[test]
    fn zero_deadline_times_out() {
        let me = shared(1);
        let target = shared(2);
        let out = TxnShared::wait_for(&me, &target, Some(Instant::now()), |t| t.is_finished());
        assert_eq!(out, WaitOutcome::TimedOut);
    }

    #[test]
    fn mutual_wait_is_broken() {
        let a = shared(1);
        let b = shared(2);
        let (a2, b2) = (Arc::clone(&a), Arc::clone(&b));
        let h = thread::spawn(move || {
            let out = TxnShared::wait_for(&b2, &a2, None, |t| t.is_finished());
            b2.finish(TxnStatus::Aborted);
            out
        });
        let out_a = TxnShared::wait_for(&a, &b, None, |t| t.is_finished());
        a.finish(TxnStatus::Aborted);
        let out_b = h.join().unwrap();
        assert!(out_a == WaitOutcome::Cycle || out_b == WaitOutcome::Cycle);
    }

    #[test]
    fn abort_dooms_dirty_readers() {
        let writer = shared(1);
        let reader = shared(2);
        writer.add_dirty_reader(Arc::clone(&reader));
        writer.finish(TxnStatus::Aborted);
        assert!(reader.is_doomed());
    }

    #[test]
    fn op_priority_unset_until_recorded() {
        let t = shared(1);
        assert_eq!(t.op_priority(2), None);
        t.set_op_priority(2, 0.25);
        assert_eq!(t.op_priority(2), Some(0.25));
        assert_eq!(t.op_priority(0), None);
        assert_eq!(t.op_priority(9), None);
    }
}

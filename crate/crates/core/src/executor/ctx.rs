use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::Instant;

use super::Engine;
use crate::agent::{Action, DetectionMode};
use crate::engine::{
    DirtyReader, Holder, Key, LatchMode, Mode, OpType, Payload, ReadEntry, Transaction, TxnId,
    TxnShared, TxnStatus, Version, WaitOutcome, Waiter, WriteEntry,
};
use crate::features::collect;
use crate::oracle::{ReadRecord, RecordLevel, TxnRecord, WriteRecord};
use crate::workload::{fold_read, write_payload, OpSpec, TxnRequest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AbortReason {
    /// A detect-all or pipeline wait ran past its timeout.
    Timeout,
    /// Detect-all with a zero timeout found a conflict.
    NoWait,
    /// Waiting would have closed a wait-for cycle.
    Cycle,
    /// A transaction this one read dirty data from aborted.
    Cascade,
    EarlyValidation,
    Validation,
    KeyNotFound,
    /// Abandoned by the driver.
    User,
}

impl AbortReason {
    pub const COUNT: usize = 8;
    pub const ALL: [AbortReason; Self::COUNT] = [
        AbortReason::Timeout,
        AbortReason::NoWait,
        AbortReason::Cycle,
        AbortReason::Cascade,
        AbortReason::EarlyValidation,
        AbortReason::Validation,
        AbortReason::KeyNotFound,
        AbortReason::User,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            AbortReason::Timeout => "timeout",
            AbortReason::NoWait => "no-wait",
            AbortReason::Cycle => "cycle",
            AbortReason::Cascade => "cascade",
            AbortReason::EarlyValidation => "early-validation",
            AbortReason::Validation => "validation",
            AbortReason::KeyNotFound => "key-not-found",
            AbortReason::User => "user",
        }
    }

    fn of_wait(o: WaitOutcome) -> Option<Self> {
        match o {
            WaitOutcome::Ready => None,
            WaitOutcome::TimedOut => Some(AbortReason::Timeout),
            WaitOutcome::Cycle => Some(AbortReason::Cycle),
            WaitOutcome::Doomed => Some(AbortReason::Cascade),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExecOutcome {
    /// Carries the version read; `None` for writes.
    Succeed(Option<Arc<Version>>),
    Abort(AbortReason),
}

impl ExecOutcome {
    pub fn is_abort(&self) -> bool {
        matches!(self, ExecOutcome::Abort(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum State {
    Running,
    Committed(u64),
    Aborted(AbortReason),
}

/// One transaction attempt bound to an [`Engine`].
///
/// Stored-procedure attempts run their declared operations with
/// [`execute_next`](Self::execute_next); interactive attempts issue them
/// one at a time with [`issue`](Self::issue). Any abort releases everything
/// the attempt holds immediately. Dropping a running attempt aborts it.
pub struct TxnCtx<'e> {
    engine: &'e Engine,
    txn: Transaction,
    req: TxnRequest,
    digest: u64,
    /// Op index of the last write to each `txn.ws` entry.
    ws_ops: Vec<u32>,
    reads: Vec<ReadRecord>,
    state: State,
}

impl<'e> TxnCtx<'e> {
    pub(super) fn new(engine: &'e Engine, req: TxnRequest, mode: Mode, ts: u64) -> Self {
        let id = engine.store.next_txn_id();
        let declared = engine
            .statics()
            .types
            .get(req.txn_type as usize)
            .map_or(0, |t| t.ops.len());
        let n_ops = match mode {
            Mode::StoredProcedure => req.ops.len(),
            Mode::Interactive => req.ops.len().max(declared),
        };
        let shared = Arc::new(TxnShared::new(id, req.txn_type, ts, n_ops));
        TxnCtx {
            engine,
            txn: Transaction::new(shared, mode, engine.active()),
            req,
            digest: 0,
            ws_ops: Vec::new(),
            reads: Vec::new(),
            state: State::Running,
        }
    }

    pub fn id(&self) -> TxnId {
        self.txn.id()
    }

    pub fn shared(&self) -> &Arc<TxnShared> {
        &self.txn.shared
    }

    pub fn transaction(&self) -> &Transaction {
        &self.txn
    }

    pub fn request(&self) -> &TxnRequest {
        &self.req
    }

    pub fn executed(&self) -> u32 {
        self.txn.executed
    }

    pub fn has_next(&self) -> bool {
        (self.txn.executed as usize) < self.req.ops.len()
    }

    pub fn abort_reason(&self) -> Option<AbortReason> {
        match self.state {
            State::Aborted(r) => Some(r),
            _ => None,
        }
    }

    /// Runs the next declared operation.
    pub fn execute_next(&mut self) -> ExecOutcome {
        let op = *self
            .req
            .ops
            .get(self.txn.executed as usize)
            .expect("no operation left to execute");
        self.execute(op)
    }

    /// Appends `op` to the transaction and runs it.
    pub fn issue(&mut self, op: OpSpec) -> ExecOutcome {
        if self.state != State::Running {
            return self.outcome_after_finish();
        }
        self.req.ops.truncate(self.txn.executed as usize);
        self.req.ops.push(op);
        self.execute(op)
    }

    pub fn read(&mut self, key: Key) -> Result<Payload, AbortReason> {
        match self.issue(OpSpec {
            key,
            op_type: OpType::Read,
        }) {
            ExecOutcome::Succeed(Some(v)) => Ok(v.payload.clone()),
            ExecOutcome::Succeed(None) => unreachable!("reads return a version"),
            ExecOutcome::Abort(r) => Err(r),
        }
    }

    pub fn write(&mut self, key: Key) -> Result<(), AbortReason> {
        match self.issue(OpSpec {
            key,
            op_type: OpType::Write,
        }) {
            ExecOutcome::Succeed(_) => Ok(()),
            ExecOutcome::Abort(r) => Err(r),
        }
    }

    fn outcome_after_finish(&self) -> ExecOutcome {
        match self.state {
            State::Aborted(r) => ExecOutcome::Abort(r),
            _ => panic!("transaction {} already committed", self.id()),
        }
    }

    fn execute(&mut self, op: OpSpec) -> ExecOutcome {
        if self.state != State::Running {
            return self.outcome_after_finish();
        }
        let eng = self.engine;
        if self.txn.shared.is_doomed() {
            return self.abort_now(AbortReason::Cascade);
        }
        let tuple = match eng.store.tuple(op.key) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("{}: {e}", self.id());
                return self.abort_now(AbortReason::KeyNotFound);
            }
        };
        let f = Arc::clone(&self.txn.function);
        let epoch = eng.store.epoch();
        let raw = collect(&self.txn, op.op_type, &tuple.stats, epoch);
        let a = f.get_cc(f.selector().select(&raw));
        let op_index = self.txn.executed + 1;
        let me = Arc::clone(&self.txn.shared);
        me.set_op_priority(op_index, a.priority);
        let write = op.op_type.is_write();
        let stored = self.txn.mode == Mode::StoredProcedure;

        let mut clean = true;
        let mut detected = false;
        let mut priority = a.priority;
        match a.detection {
            DetectionMode::NoDetection => {}
            DetectionMode::DetectAll => {
                let targets: Vec<Arc<TxnShared>> = {
                    let mut st = tuple.guard();
                    let t: Vec<_> = st
                        .holders
                        .iter()
                        .filter(|h| {
                            h.txn.id != me.id
                                && (h.write || write)
                                && h.priority >= a.priority
                                && !h.txn.is_settled()
                        })
                        .map(|h| Arc::clone(&h.txn))
                        .collect();
                    if !t.is_empty() && a.timeout_us > 0.0 {
                        let arrival = eng.store.next_arrival();
                        let at = st
                            .waiters
                            .iter()
                            .position(|w| !w.ranks_before(a.priority, arrival))
                            .unwrap_or(st.waiters.len());
                        st.waiters.insert(
                            at,
                            Waiter {
                                txn: Arc::clone(&me),
                                write,
                                priority: a.priority,
                                arrival,
                            },
                        );
                    }
                    t
                };
                if !targets.is_empty() {
                    detected = true;
                    tuple.stats.bump_hotness(epoch);
                    if a.timeout_us <= 0.0 {
                        return self.abort_now(AbortReason::NoWait);
                    }
                    eng.stats.wait_events.fetch_add(1, Ordering::Relaxed);
                    let deadline = a.deadline(Instant::now());
                    let mut failed = None;
                    for t in &targets {
                        failed = AbortReason::of_wait(TxnShared::wait_for(&me, t, deadline, |t| t.is_settled()));
                        if failed.is_some() {
                            break;
                        }
                    }
                    tuple.guard().waiters.retain(|w| w.txn.id != me.id);
                    if let Some(r) = failed {
                        return self.abort_now(r);
                    }
                }
                // Whoever passed detect-all keeps later requesters behind it.
                priority = 1.0;
                me.set_op_priority(op_index, priority);
            }
            DetectionMode::DetectCritical => {
                if stored {
                    clean = false;
                    if let Err(r) = self.pipeline_wait(a) {
                        return self.abort_now(r);
                    }
                } else if !self.early_validate() {
                    return self.abort_now(AbortReason::EarlyValidation);
                }
            }
        }

        // SafeExecute: read and register as an accessor under one latch hold.
        let own = if write {
            None
        } else {
            self.txn.write_entry(op.key).map(|w| (w.wseq, w.payload.clone()))
        };
        let own_read = own.is_some();
        if !write && !clean && !own_read {
            // A doomed writer's version is about to disappear; let it.
            let doomed = tuple.peek(|st| match st.chain.latest_any() {
                Some(v) if !v.committed && v.writer != me.id => st
                    .holders
                    .iter()
                    .find(|h| h.txn.id == v.writer && h.txn.is_doomed() && !h.txn.is_settled())
                    .map(|h| Arc::clone(&h.txn)),
                _ => None,
            });
            if let Some(w) = doomed {
                let deadline = a.deadline(Instant::now());
                if let Some(r) = AbortReason::of_wait(TxnShared::wait_for(&me, &w, deadline, |t| t.is_settled())) {
                    return self.abort_now(r);
                }
            }
        }
        let mut dirty_from = None;
        let mut newly_touched = false;
        let (version, conflict) = {
            let mut st = tuple.guard();
            let conflict = st
                .holders
                .iter()
                .any(|h| h.txn.id != me.id && (h.write || write) && !h.txn.is_finished());
            match st.holders.iter_mut().find(|h| h.txn.id == me.id) {
                Some(h) => {
                    h.write |= write;
                    h.priority = h.priority.max(priority);
                }
                None => {
                    st.holders.push(Holder {
                        txn: Arc::clone(&me),
                        write,
                        priority,
                    });
                    newly_touched = true;
                }
            }
            let version = if write {
                None
            } else if let Some((wseq, payload)) = own {
                Some(Arc::new(Version::dirty(me.id, wseq, payload)))
            } else if clean {
                st.chain.latest_committed().cloned()
            } else {
                match st.chain.latest_any().cloned() {
                    Some(v) if !v.committed && v.writer != me.id => {
                        let writer = st
                            .holders
                            .iter()
                            .find(|h| h.txn.id == v.writer)
                            .map(|h| Arc::clone(&h.txn));
                        match writer {
                            // committed, promotion pending: same identity as
                            // the version about to be installed
                            Some(w) if w.status() == TxnStatus::Committed => Some(v),
                            // reading from a doomed writer only spreads its abort
                            Some(w) if !w.is_doomed() && !w.is_finished() => {
                                w.add_dirty_reader(Arc::clone(&me));
                                st.dirty_readers.push(DirtyReader {
                                    txn: Arc::clone(&me),
                                    writer: w.id,
                                });
                                dirty_from = Some(w);
                                Some(v)
                            }
                            _ => st.chain.latest_committed().cloned(),
                        }
                    }
                    other => other,
                }
            };
            (version, conflict)
        };
        if newly_touched {
            self.txn.touched.push(op.key);
        }
        if conflict && !detected {
            tuple.stats.bump_hotness(epoch);
        }
        if let Some(w) = dirty_from {
            self.txn.add_dep(&w, true);
            self.txn.dirty_read_keys.push(op.key);
            eng.stats.dirty_reads.fetch_add(1, Ordering::Relaxed);
        }

        if write {
            let payload = write_payload(self.req.seed, op_index, self.digest);
            match self.txn.ws.iter().position(|w| w.key == op.key) {
                Some(i) => {
                    self.txn.ws[i].payload = payload;
                    self.txn.ws[i].wseq += 1;
                    self.ws_ops[i] = op_index;
                }
                None => {
                    self.txn.ws.push(WriteEntry {
                        key: op.key,
                        payload,
                        wseq: 1,
                        exposed: None,
                    });
                    self.ws_ops.push(op_index);
                }
            }
        } else {
            let Some(v) = version.as_ref() else {
                return self.abort_now(AbortReason::KeyNotFound);
            };
            self.digest = fold_read(self.digest, &v.payload);
            if eng.recorder().level() == RecordLevel::Full {
                self.reads.push(ReadRecord {
                    op_index,
                    key: op.key,
                    version: v.id(),
                });
            }
            if !own_read {
                self.txn.validate.push(self.txn.rs.len());
                self.txn.rs.push(ReadEntry {
                    key: op.key,
                    version: Arc::clone(v),
                });
            }
        }

        if stored && a.expose {
            if !self.early_validate() {
                return self.abort_now(AbortReason::EarlyValidation);
            }
            if self.txn.ws.iter().any(|w| w.exposed != Some(w.wseq)) {
                if let Err(r) = self.defer_expose(op_index) {
                    return self.abort_now(r);
                }
                self.expose();
            }
        }

        self.txn.executed = op_index;
        me.advance_progress(op_index);
        ExecOutcome::Succeed(version)
    }

    /// Waits until, for every dependency, its first `w[type]` operations
    /// are done, ignoring operations whose priority is below `a`'s.
    fn pipeline_wait(&self, a: &Action) -> Result<(), AbortReason> {
        let me = &self.txn.shared;
        let p = a.priority;
        let deadline = a.deadline(Instant::now());
        let mut waited = false;
        for d in &self.txn.dep {
            let bar = a
                .waits
                .get(d.txn.txn_type as usize)
                .copied()
                .unwrap_or(0)
                .min(d.txn.n_ops());
            if bar == 0 {
                continue;
            }
            let ready = |t: &TxnShared| {
                t.is_finished() || {
                    let prog = t.progress();
                    prog >= bar || (prog + 1..=bar).all(|j| t.op_priority(j).is_some_and(|q| q < p))
                }
            };
            if ready(&d.txn) {
                continue;
            }
            waited = true;
            if let Some(r) = AbortReason::of_wait(TxnShared::wait_for(me, &d.txn, deadline, ready)) {
                return Err(r);
            }
        }
        if waited {
            self.engine.stats.wait_events.fetch_add(1, Ordering::Relaxed);
        }
        Ok(())
    }

    /// Re-checks every not yet validated read against the chain tail,
    /// ignoring this transaction's own dirty versions.
    fn early_validate(&mut self) -> bool {
        let me = self.txn.id();
        for &i in &self.txn.validate {
            let r = &self.txn.rs[i];
            let Ok(tuple) = self.engine.store.tuple(r.key) else {
                return false;
            };
            let cur = tuple.peek(|st| st.chain.latest_excluding_dirty_of(me).map(|v| v.id()));
            if cur != Some(r.version.id()) {
                return false;
            }
        }
        self.txn.validate.clear();
        true
    }

    /// Before exposing after operation `op_index`: honour the next
    /// operation's pipeline waits, or after the last operation wait for
    /// every dependency to finish.
    fn defer_expose(&self, op_index: u32) -> Result<(), AbortReason> {
        let eng = self.engine;
        match self.req.ops.get(op_index as usize) {
            Some(next) => {
                let tuple = eng.store.tuple(next.key).map_err(|_| AbortReason::KeyNotFound)?;
                let mut raw = collect(&self.txn, next.op_type, &tuple.stats, eng.store.epoch());
                raw.op_index = op_index + 1;
                let f = &self.txn.function;
                let a = f.get_cc(f.selector().select(&raw));
                if a.detection == DetectionMode::DetectCritical {
                    self.pipeline_wait(a)?;
                }
            }
            None => {
                let me = &self.txn.shared;
                for d in &self.txn.dep {
                    if let Some(r) = AbortReason::of_wait(TxnShared::wait_for(me, &d.txn, None, |t| t.is_finished())) {
                        return Err(r);
                    }
                    if d.read_from && d.txn.status() == TxnStatus::Aborted {
                        return Err(AbortReason::Cascade);
                    }
                }
            }
        }
        Ok(())
    }

    /// Appends every unexposed write as a dirty version and records the
    /// dirty readers of older versions as anti-dependencies.
    fn expose(&mut self) {
        let eng = self.engine;
        let me = self.txn.id();
        let mut idx: Vec<usize> = (0..self.txn.ws.len())
            .filter(|&i| self.txn.ws[i].exposed != Some(self.txn.ws[i].wseq))
            .collect();
        idx.sort_by_key(|&i| self.txn.ws[i].key);
        for &i in &idx {
            eng.store
                .lock_tuple(self.txn.ws[i].key, me, LatchMode::Expose)
                .expect("write-set key exists");
        }
        let mut anti = Vec::new();
        for &i in &idx {
            let w = &mut self.txn.ws[i];
            anti.extend(
                eng.store
                    .expose_dirty(w.key, me, w.wseq, w.payload.clone())
                    .expect("latch held"),
            );
            w.exposed = Some(w.wseq);
        }
        for &i in &idx {
            eng.store.unlock_tuple(self.txn.ws[i].key, me).expect("latch held");
        }
        for r in anti {
            self.txn.add_dep(&r, false);
        }
        eng.stats.expose_events.fetch_add(1, Ordering::Relaxed);
        eng.stats.dirty_appends.fetch_add(idx.len() as u64, Ordering::Relaxed);
    }

    /// Validation and commit. Returns the serialization number.
    pub fn commit(&mut self) -> Result<u64, AbortReason> {
        match self.state {
            State::Committed(seq) => return Ok(seq),
            State::Aborted(r) => return Err(r),
            State::Running => {}
        }
        let eng = self.engine;
        let me = Arc::clone(&self.txn.shared);
        let deps: Vec<(Arc<TxnShared>, bool)> = self
            .txn
            .dep
            .iter()
            .map(|d| (Arc::clone(&d.txn), d.read_from))
            .collect();
        for (d, read_from) in &deps {
            if let Some(r) = AbortReason::of_wait(TxnShared::wait_for(&me, d, None, |t| t.is_finished())) {
                return Err(self.abort_with(r, &[]));
            }
            if *read_from && d.status() == TxnStatus::Aborted {
                return Err(self.abort_with(AbortReason::Cascade, &[]));
            }
        }
        if me.is_doomed() {
            return Err(self.abort_with(AbortReason::Cascade, &[]));
        }

        let mut order: Vec<usize> = (0..self.txn.ws.len()).collect();
        order.sort_by_key(|&i| self.txn.ws[i].key);
        let latched: Vec<Key> = order.iter().map(|&i| self.txn.ws[i].key).collect();
        for &k in &latched {
            eng.store
                .lock_tuple(k, me.id, LatchMode::Commit)
                .expect("write-set key exists");
        }
        // Serialization point.
        let seq = eng.store.next_serial();
        if let Err(r) = self.validate_reads() {
            return Err(self.abort_with(r, &latched));
        }
        me.finish(TxnStatus::Committed);
        for &i in &order {
            let w = &self.txn.ws[i];
            eng.store
                .promote_commit(w.key, me.id, w.wseq, w.payload.clone())
                .expect("latch held");
            eng.store.unlock_tuple(w.key, me.id).expect("latch held");
        }
        self.record(seq);
        self.unregister();
        me.settle();
        eng.verify_pinned(&self.txn.function);
        eng.stats.commits.fetch_add(1, Ordering::Relaxed);
        if let Some(c) = eng.stats.type_commits.get(self.req.txn_type as usize) {
            c.fetch_add(1, Ordering::Relaxed);
        }
        self.state = State::Committed(seq);
        Ok(seq)
    }

    fn validate_reads(&self) -> Result<(), AbortReason> {
        let me = self.txn.id();
        for r in &self.txn.rs {
            let tuple = self.engine.store.tuple(r.key).map_err(|_| AbortReason::KeyNotFound)?;
            loop {
                // None: the key is mid-promotion by a transaction that has
                // already committed; its new version is about to appear.
                let verdict = tuple.peek(|st| {
                    if st.latched_by_other_committer(me) {
                        let owner = st.latch.map(|(o, _)| o)?;
                        match st.holder(owner).map(|h| h.txn.status()) {
                            Some(TxnStatus::Committed) => None,
                            _ => Some(false),
                        }
                    } else {
                        Some(st.chain.latest_committed().map(|v| v.id()) == Some(r.version.id()))
                    }
                });
                match verdict {
                    Some(true) => break,
                    Some(false) => return Err(AbortReason::Validation),
                    None => std::thread::yield_now(),
                }
            }
        }
        Ok(())
    }

    /// Abandons the attempt.
    pub fn abort(&mut self) -> AbortReason {
        match self.state {
            State::Running => self.abort_with(AbortReason::User, &[]),
            State::Aborted(r) => r,
            State::Committed(_) => panic!("transaction {} already committed", self.id()),
        }
    }

    fn abort_now(&mut self, r: AbortReason) -> ExecOutcome {
        ExecOutcome::Abort(self.abort_with(r, &[]))
    }

    /// Removes exposed versions, releases `latched`, marks the transaction
    /// aborted (dooming its dirty readers) and drops its registrations.
    fn abort_with(&mut self, reason: AbortReason, latched: &[Key]) -> AbortReason {
        let eng = self.engine;
        let me = self.txn.id();
        let mut exposed: Vec<Key> = self
            .txn
            .ws
            .iter()
            .filter(|w| w.exposed.is_some())
            .map(|w| w.key)
            .collect();
        exposed.sort();
        if latched.is_empty() {
            for &k in &exposed {
                eng.store.lock_tuple(k, me, LatchMode::Expose).expect("exposed key exists");
            }
            for &k in &exposed {
                eng.store.remove_dirty(k, me).expect("latch held");
                eng.store.unlock_tuple(k, me).expect("latch held");
            }
        } else {
            for &k in &exposed {
                eng.store.remove_dirty(k, me).expect("latch held");
            }
            for &k in latched {
                eng.store.unlock_tuple(k, me).expect("latch held");
            }
        }
        for w in &mut self.txn.ws {
            w.exposed = None;
        }
        self.txn.shared.finish(TxnStatus::Aborted);
        self.unregister();
        self.txn.shared.settle();
        eng.stats.aborts.fetch_add(1, Ordering::Relaxed);
        if let Some(c) = eng.stats.type_aborts.get(self.req.txn_type as usize) {
            c.fetch_add(1, Ordering::Relaxed);
        }
        eng.stats.abort_reasons[reason.index()].fetch_add(1, Ordering::Relaxed);
        if eng.recorder().enabled() {
            eng.recorder().note_abort();
        }
        self.state = State::Aborted(reason);
        reason
    }

    fn unregister(&mut self) {
        let me = self.txn.id();
        let mut keys: Vec<Key> = self
            .txn
            .touched
            .iter()
            .chain(&self.txn.dirty_read_keys)
            .copied()
            .collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            if let Ok(t) = self.engine.store.tuple(k) {
                t.guard().unregister(me);
            }
        }
    }

    fn record(&mut self, seq: u64) {
        let rec = self.engine.recorder();
        if !rec.enabled() {
            return;
        }
        let full = rec.level() == RecordLevel::Full;
        rec.push(TxnRecord {
            id: self.txn.id(),
            txn_type: self.req.txn_type,
            seed: self.req.seed,
            seq,
            ops: if full { self.req.ops.clone() } else { Vec::new() },
            reads: std::mem::take(&mut self.reads),
            writes: if full {
                self.txn
                    .ws
                    .iter()
                    .zip(&self.ws_ops)
                    .map(|(w, &op_index)| WriteRecord {
                        op_index,
                        key: w.key,
                        wseq: w.wseq,
                        payload: w.payload.clone(),
                    })
                    .collect()
            } else {
                Vec::new()
            },
            deps: self.txn.dep.iter().map(|d| (d.txn.id, d.read_from)).collect(),
            fn_version: self.txn.function.version(),
        });
    }
}

impl Drop for TxnCtx<'_> {
    fn drop(&mut self) {
        if self.state == State::Running {
            self.abort_with(AbortReason::User, &[]);
        }
    }
}

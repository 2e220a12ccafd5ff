use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::{Mutex, MutexGuard};
use thiserror::Error;

use super::chain::VersionChain;
use super::key::{Key, TableId, TxnId};
use super::txn::{OpType, TxnShared};
use super::version::{Payload, Version};

/// Interval after which a key's conflict counter is halved.
pub const HOTNESS_HALF_LIFE: Duration = Duration::from_millis(100);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("key {0} not found")]
    KeyNotFound(Key),
    #[error("transaction {txn} does not hold the latch on {key}")]
    LatchNotHeld { key: Key, txn: TxnId },
    #[error("transaction {txn} already holds the latch on {key}")]
    LatchReentry { key: Key, txn: TxnId },
}

/// Why a latch is held. Validation treats a commit latch held by another
/// transaction as a conflict; an expose latch only guards dirty appends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatchMode {
    Commit,
    Expose,
}

/// A transaction that has accessed the tuple and not finished yet.
#[derive(Clone, Debug)]
pub struct Holder {
    pub txn: Arc<TxnShared>,
    pub write: bool,
    pub priority: f32,
}

/// A transaction parked in detect-all conflict detection on this tuple.
#[derive(Clone, Debug)]
pub struct Waiter {
    pub txn: Arc<TxnShared>,
    pub write: bool,
    pub priority: f32,
    pub arrival: u64,
}

impl Waiter {
    /// Queue order: priority descending, arrival ascending.
    pub fn ranks_before(&self, priority: f32, arrival: u64) -> bool {
        self.priority > priority || (self.priority == priority && self.arrival < arrival)
    }
}

/// A running transaction that read an uncommitted version of the tuple.
#[derive(Clone, Debug)]
pub struct DirtyReader {
    pub txn: Arc<TxnShared>,
    /// Writer of the version it read.
    pub writer: TxnId,
}

/// Mutable tuple state guarded by the tuple's structure mutex.
#[derive(Debug, Default)]
pub struct TupleState {
    pub chain: VersionChain,
    pub latch: Option<(TxnId, LatchMode)>,
    pub holders: Vec<Holder>,
    pub waiters: Vec<Waiter>,
    pub dirty_readers: Vec<DirtyReader>,
}

impl TupleState {
    pub fn latched_by_other_committer(&self, txn: TxnId) -> bool {
        matches!(self.latch, Some((owner, LatchMode::Commit)) if owner != txn)
    }

    pub fn holder(&self, txn: TxnId) -> Option<&Holder> {
        self.holders.iter().find(|h| h.txn.id == txn)
    }

    /// Drops every registration of `txn` on this tuple.
    pub fn unregister(&mut self, txn: TxnId) {
        self.holders.retain(|h| h.txn.id != txn);
        self.waiters.retain(|w| w.txn.id != txn);
        self.dirty_readers.retain(|r| r.txn.id != txn);
    }
}

/// Relaxed counters read by feature collection without taking any lock.
#[derive(Debug)]
pub struct TupleStats {
    /// High 32 bits: decay epoch of the last update; low 32 bits: count.
    hotness: AtomicU64,
    accessors: AtomicU32,
    oldest_writer_ts: AtomicU64,
    oldest_any_ts: AtomicU64,
}

impl Default for TupleStats {
    fn default() -> Self {
        TupleStats {
            hotness: AtomicU64::new(0),
            accessors: AtomicU32::new(0),
            oldest_writer_ts: AtomicU64::new(u64::MAX),
            oldest_any_ts: AtomicU64::new(u64::MAX),
        }
    }
}

/// Value of a decaying counter `count` last touched at `epoch`, observed at
/// `now`: halved once per elapsed epoch.
pub fn decayed(count: u32, epoch: u32, now: u32) -> u32 {
    let shift = now.saturating_sub(epoch);
    if shift >= 32 {
        0
    } else {
        count >> shift
    }
}

impl TupleStats {
    pub fn hotness(&self, now_epoch: u32) -> u32 {
        let packed = self.hotness.load(Ordering::Relaxed);
        decayed(packed as u32, (packed >> 32) as u32, now_epoch)
    }

    pub fn bump_hotness(&self, now_epoch: u32) {
        let _ = self
            .hotness
            .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |packed| {
                let v = decayed(packed as u32, (packed >> 32) as u32, now_epoch);
                Some(((now_epoch as u64) << 32) | v.saturating_add(1) as u64)
            });
    }

    pub fn accessors(&self) -> u32 {
        self.accessors.load(Ordering::Relaxed)
    }

    /// Start stamp of the oldest running transaction that conflicts with an
    /// access of type `op`; `u64::MAX` when there is none.
    pub fn oldest_conflicting(&self, op: OpType) -> u64 {
        match op {
            OpType::Read => self.oldest_writer_ts.load(Ordering::Relaxed),
            OpType::Write => self.oldest_any_ts.load(Ordering::Relaxed),
        }
    }

    fn refresh(&self, st: &TupleState) {
        let mut oldest_w = u64::MAX;
        let mut oldest_any = u64::MAX;
        let holders = st.holders.iter().map(|h| (h.txn.timestamp, h.write));
        let waiters = st.waiters.iter().map(|w| (w.txn.timestamp, w.write));
        for (ts, write) in holders.chain(waiters) {
            oldest_any = oldest_any.min(ts);
            if write {
                oldest_w = oldest_w.min(ts);
            }
        }
        self.oldest_writer_ts.store(oldest_w, Ordering::Relaxed);
        self.oldest_any_ts.store(oldest_any, Ordering::Relaxed);
        self.accessors
            .store((st.holders.len() + st.waiters.len()) as u32, Ordering::Relaxed);
    }
}

/// One tuple: its version chain and bookkeeping.
#[derive(Debug, Default)]
pub struct Tuple {
    state: Mutex<TupleState>,
    pub stats: TupleStats,
}

/// Guard over a tuple's state that republishes the lock-free stats on drop.
pub struct TupleGuard<'a> {
    guard: MutexGuard<'a, TupleState>,
    stats: &'a TupleStats,
}

impl std::ops::Deref for TupleGuard<'_> {
    type Target = TupleState;
    fn deref(&self) -> &TupleState {
        &self.guard
    }
}

impl std::ops::DerefMut for TupleGuard<'_> {
    fn deref_mut(&mut self) -> &mut TupleState {
        &mut self.guard
    }
}

impl Drop for TupleGuard<'_> {
    fn drop(&mut self) {
        self.stats.refresh(&self.guard);
    }
}

impl Tuple {
    pub fn guard(&self) -> TupleGuard<'_> {
        TupleGuard {
            guard: self.state.lock(),
            stats: &self.stats,
        }
    }

    /// Short read-only peek that skips republishing stats.
    pub fn peek<R>(&self, f: impl FnOnce(&TupleState) -> R) -> R {
        f(&self.state.lock())
    }
}

#[derive(Debug)]
struct Table {
    name: String,
    rows: Vec<Tuple>,
}

/// Pre-populated multi-version tuple store.
///
/// Tables and their row counts are fixed at construction; every row starts
/// with a committed version written by [`TxnId::LOADER`].
#[derive(Debug)]
pub struct Store {
    tables: Vec<Table>,
    clock: Instant,
    next_txn: AtomicU64,
    next_serial: AtomicU64,
    next_arrival: AtomicU64,
    lock_trace: Option<Mutex<Vec<(TxnId, Key)>>>,
}

impl Store {
    /// Builds a store with the given `(table name, row count)` schema; rows
    /// hold `init(key)` as their initial payload.
    pub fn new(schema: &[(&str, u64)], init: impl Fn(Key) -> Payload) -> Self {
        let tables = schema
            .iter()
            .enumerate()
            .map(|(t, &(name, rows))| Table {
                name: name.to_string(),
                rows: (0..rows)
                    .map(|row| {
                        let key = Key::new(t as u16, row);
                        Tuple {
                            state: Mutex::new(TupleState {
                                chain: VersionChain::with_initial(Version::committed(
                                    TxnId::LOADER,
                                    0,
                                    init(key),
                                )),
                                ..Default::default()
                            }),
                            stats: TupleStats::default(),
                        }
                    })
                    .collect(),
            })
            .collect();
        Store {
            tables,
            clock: Instant::now(),
            next_txn: AtomicU64::new(1),
            next_serial: AtomicU64::new(1),
            next_arrival: AtomicU64::new(1),
            lock_trace: None,
        }
    }

    /// Records every latch acquisition as `(txn, key)`; test instrumentation.
    pub fn with_lock_trace(mut self) -> Self {
        self.lock_trace = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn take_lock_trace(&self) -> Vec<(TxnId, Key)> {
        self.lock_trace
            .as_ref()
            .map(|t| std::mem::take(&mut *t.lock()))
            .unwrap_or_default()
    }

    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    pub fn table_name(&self, t: TableId) -> Option<&str> {
        self.tables.get(t.0 as usize).map(|t| t.name.as_str())
    }

    pub fn table_len(&self, t: TableId) -> u64 {
        self.tables.get(t.0 as usize).map_or(0, |t| t.rows.len() as u64)
    }

    pub fn keys(&self) -> impl Iterator<Item = Key> + '_ {
        self.tables.iter().enumerate().flat_map(|(t, table)| {
            (0..table.rows.len() as u64).map(move |row| Key::new(t as u16, row))
        })
    }

    pub fn tuple(&self, key: Key) -> Result<&Tuple, EngineError> {
        self.tables
            .get(key.table.0 as usize)
            .and_then(|t| t.rows.get(key.row as usize))
            .ok_or(EngineError::KeyNotFound(key))
    }

    pub fn next_txn_id(&self) -> TxnId {
        TxnId(self.next_txn.fetch_add(1, Ordering::SeqCst))
    }

    pub fn next_serial(&self) -> u64 {
        self.next_serial.fetch_add(1, Ordering::SeqCst)
    }

    pub fn next_arrival(&self) -> u64 {
        self.next_arrival.fetch_add(1, Ordering::Relaxed)
    }

    /// Current hotness decay epoch.
    pub fn epoch(&self) -> u32 {
        (self.clock.elapsed().as_nanos() / HOTNESS_HALF_LIFE.as_nanos()) as u32
    }

    pub fn read_latest_committed(&self, key: Key) -> Result<Arc<Version>, EngineError> {
        let t = self.tuple(key)?;
        t.peek(|st| st.chain.latest_committed().cloned())
            .ok_or(EngineError::KeyNotFound(key))
    }

    pub fn read_latest_any(&self, key: Key) -> Result<Arc<Version>, EngineError> {
        let t = self.tuple(key)?;
        t.peek(|st| st.chain.latest_any().cloned())
            .ok_or(EngineError::KeyNotFound(key))
    }

    /// Acquires the tuple latch for `txn`, yielding while another transaction
    /// holds it. Latches are only held for short non-blocking sections, and
    /// multi-key acquisitions go in [`Key`] order.
    pub fn lock_tuple(&self, key: Key, txn: TxnId, mode: LatchMode) -> Result<(), EngineError> {
        let t = self.tuple(key)?;
        let mut spins = 0u32;
        loop {
            {
                let mut st = t.state.lock();
                match st.latch {
                    None => {
                        st.latch = Some((txn, mode));
                        break;
                    }
                    Some((owner, _)) if owner == txn => {
                        return Err(EngineError::LatchReentry { key, txn })
                    }
                    Some(_) => {}
                }
            }
            spins += 1;
            if spins < 64 {
                std::thread::yield_now();
            } else {
                std::thread::sleep(Duration::from_micros(20));
            }
        }
        if let Some(trace) = &self.lock_trace {
            trace.lock().push((txn, key));
        }
        Ok(())
    }

    pub fn unlock_tuple(&self, key: Key, txn: TxnId) -> Result<(), EngineError> {
        let t = self.tuple(key)?;
        let mut st = t.state.lock();
        match st.latch {
            Some((owner, _)) if owner == txn => {
                st.latch = None;
                Ok(())
            }
            _ => Err(EngineError::LatchNotHeld { key, txn }),
        }
    }

    fn latched<R>(
        &self,
        key: Key,
        txn: TxnId,
        f: impl FnOnce(&mut TupleState) -> R,
    ) -> Result<R, EngineError> {
        let t = self.tuple(key)?;
        let mut st = t.guard();
        match st.latch {
            Some((owner, _)) if owner == txn => Ok(f(&mut st)),
            _ => Err(EngineError::LatchNotHeld { key, txn }),
        }
    }

    pub fn append_dirty(
        &self,
        key: Key,
        txn: TxnId,
        wseq: u32,
        payload: Payload,
    ) -> Result<(), EngineError> {
        self.latched(key, txn, |st| st.chain.append_dirty(txn, wseq, payload))
    }

    pub fn promote_commit(
        &self,
        key: Key,
        txn: TxnId,
        wseq: u32,
        payload: Payload,
    ) -> Result<(), EngineError> {
        self.latched(key, txn, |st| st.chain.promote_commit(txn, wseq, payload))
    }

    /// Appends `txn`'s dirty version and, in the same critical section,
    /// returns the running transactions that dirty-read an older version
    /// written by someone else. They must serialize before `txn`.
    pub fn expose_dirty(
        &self,
        key: Key,
        txn: TxnId,
        wseq: u32,
        payload: Payload,
    ) -> Result<Vec<Arc<TxnShared>>, EngineError> {
        self.latched(key, txn, |st| {
            st.chain.append_dirty(txn, wseq, payload);
            st.dirty_readers
                .iter()
                .filter(|r| r.txn.id != txn && r.writer != txn && !r.txn.is_finished())
                .map(|r| Arc::clone(&r.txn))
                .collect()
        })
    }

    /// Removes `txn`'s dirty version; absent versions are a no-op.
    pub fn remove_dirty(&self, key: Key, txn: TxnId) -> Result<(), EngineError> {
        self.latched(key, txn, |st| {
            st.chain.remove_dirty(txn);
        })
    }

    /// Latest committed version of every key.
    pub fn snapshot(&self) -> Vec<(Key, Arc<Version>)> {
        self.keys()
            .map(|k| (k, self.read_latest_committed(k).expect("loaded key")))
            .collect()
    }

    /// Dirty versions currently on any chain written by `txn`.
    pub fn dirty_versions_of(&self, txn: TxnId) -> usize {
        self.tables
            .iter()
            .flat_map(|t| t.rows.iter())
            .filter(|t| t.peek(|st| st.chain.dirty_of(txn).is_some()))
            .count()
    }

    pub fn total_dirty_versions(&self) -> usize {
        self.tables
            .iter()
            .flat_map(|t| t.rows.iter())
            .map(|t| t.peek(|st| st.chain.dirty_count()))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::atomic::AtomicBool;
    use std::thread;

    fn store(rows: u64) -> Store {
        Store::new(&[("t", rows)], |k| Payload::from_u64(k.row))
    }

    #[test]
    fn missing_key_is_an_error() {
        let s = store(4);
        assert_eq!(
            s.read_latest_committed(Key::new(0, 4)).unwrap_err(),
            EngineError::KeyNotFound(Key::new(0, 4))
        );
        assert!(s.read_latest_any(Key::new(3, 0)).is_err());
    }

    #[test]
    fn chain_mutation_requires_latch() {
        let s = store(1);
        let k = Key::new(0, 0);
        let t = TxnId(9);
        assert!(matches!(
            s.append_dirty(k, t, 1, Payload::from_u64(1)),
            Err(EngineError::LatchNotHeld { .. })
        ));
        s.lock_tuple(k, t, LatchMode::Expose).unwrap();
        assert!(matches!(
            s.lock_tuple(k, t, LatchMode::Expose),
            Err(EngineError::LatchReentry { .. })
        ));
        s.append_dirty(k, t, 1, Payload::from_u64(1)).unwrap();
        assert_eq!(s.read_latest_any(k).unwrap().writer, t);
        assert_eq!(s.read_latest_committed(k).unwrap().writer, TxnId::LOADER);
        s.remove_dirty(k, t).unwrap();
        s.remove_dirty(k, t).unwrap();
        s.unlock_tuple(k, t).unwrap();
        assert_eq!(s.read_latest_any(k).unwrap().writer, TxnId::LOADER);
        assert!(s.unlock_tuple(k, t).is_err());
    }

    #[test]
    fn disjoint_locks_do_not_block() {
        let s = store(2);
        s.lock_tuple(Key::new(0, 0), TxnId(1), LatchMode::Commit).unwrap();
        s.lock_tuple(Key::new(0, 1), TxnId(2), LatchMode::Commit).unwrap();
        s.unlock_tuple(Key::new(0, 0), TxnId(1)).unwrap();
        s.unlock_tuple(Key::new(0, 1), TxnId(2)).unwrap();
    }

    #[test]
    fn interleaved_appends_match_serial_replay() {
        // Four writers append/remove under the latch; the recorded latch order
        // replayed on a private chain must yield the same final chain.
        let s = Arc::new(store(1).with_lock_trace());
        let k = Key::new(0, 0);
        let log = Arc::new(Mutex::new(Vec::new()));
        let handles: Vec<_> = (1..=4u64)
            .map(|w| {
                let s = Arc::clone(&s);
                let log = Arc::clone(&log);
                thread::spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(w);
                    for i in 0..200u32 {
                        let txn = TxnId(w);
                        s.lock_tuple(k, txn, LatchMode::Expose).unwrap();
                        let append = rng.gen_bool(0.6);
                        if append {
                            s.append_dirty(k, txn, i, Payload::from_u64(i as u64)).unwrap();
                        } else {
                            s.remove_dirty(k, txn).unwrap();
                        }
                        log.lock().push((txn, append, i));
                        s.unlock_tuple(k, txn).unwrap();
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let mut replay = VersionChain::with_initial(Version::committed(
            TxnId::LOADER,
            0,
            Payload::from_u64(0),
        ));
        for &(txn, append, i) in log.lock().iter() {
            if append {
                replay.append_dirty(txn, i, Payload::from_u64(i as u64));
            } else {
                replay.remove_dirty(txn);
            }
        }
        let actual = s.tuple(k).unwrap().peek(|st| st.chain.versions().to_vec());
        assert_eq!(actual, replay.versions().to_vec());
        assert_eq!(s.take_lock_trace().len(), 800);
    }

    #[test]
    fn ordered_locking_never_deadlocks() {
        let s = Arc::new(store(8));
        let done = Arc::new(AtomicBool::new(false));
        let watchdog = {
            let done = Arc::clone(&done);
            thread::spawn(move || {
                let start = Instant::now();
                while !done.load(Ordering::SeqCst) {
                    assert!(start.elapsed() < Duration::from_secs(60), "latch deadlock");
                    thread::sleep(Duration::from_millis(10));
                }
            })
        };
        let handles: Vec<_> = (1..=2u64)
            .map(|w| {
                let s = Arc::clone(&s);
                thread::spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(w * 31);
                    let all: Vec<u64> = (0..8).collect();
                    for _ in 0..5_000 {
                        let n = rng.gen_range(1..=4);
                        let mut keys: Vec<Key> = all
                            .choose_multiple(&mut rng, n)
                            .map(|&r| Key::new(0, r))
                            .collect();
                        keys.sort();
                        for &k in &keys {
                            s.lock_tuple(k, TxnId(w), LatchMode::Commit).unwrap();
                        }
                        for &k in &keys {
                            s.unlock_tuple(k, TxnId(w)).unwrap();
                        }
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        done.store(true, Ordering::SeqCst);
        watchdog.join().unwrap();
    }

    #[test]
    fn hotness_halves_per_epoch() {
        // Replay of the recurrence: 100 bumps at epoch 0, then observe.
        let stats = TupleStats::default();
        for _ in 0..100 {
            stats.bump_hotness(0);
        }
        let mut expect = 100u32;
        for epoch in 0..10 {
            assert_eq!(stats.hotness(epoch), expect);
            expect /= 2;
        }
        stats.bump_hotness(3);
        assert_eq!(stats.hotness(3), 100 / 8 + 1);
    }
}

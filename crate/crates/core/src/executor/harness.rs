use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Engine, ExecOutcome, StatsSnapshot};
use crate::agent::AgentFunction;
use crate::engine::{Mode, TxnShared, TxnStatus};
use crate::workload::{mix64, TxnRequest, Workload};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub threads: usize,
    pub warmup: Duration,
    pub measure: Duration,
    pub mode: Mode,
    pub seed: u64,
    /// Total transactions to start across all workers; the run ends early
    /// once they are all done.
    pub max_txns: Option<u64>,
    /// Throughput timeline sampling period.
    pub sample_every: Option<Duration>,
    /// No commit for this long counts as a stall; every running attempt is
    /// then doomed so the workers can make progress.
    pub stall_after: Duration,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            threads: 4,
            warmup: Duration::from_secs(1),
            measure: Duration::from_secs(2),
            mode: Mode::StoredProcedure,
            seed: 1,
            max_txns: None,
            sample_every: None,
            stall_after: Duration::from_secs(5),
        }
    }
}

impl RunConfig {
    /// A fixed number of transactions, no warmup, no time bound to speak of.
    pub fn counted(threads: usize, txns: u64, seed: u64) -> Self {
        RunConfig {
            threads,
            warmup: Duration::ZERO,
            measure: Duration::from_secs(600),
            seed,
            max_txns: Some(txns),
            ..Default::default()
        }
    }

    pub fn timed(threads: usize, warmup: Duration, measure: Duration) -> Self {
        RunConfig {
            threads,
            warmup,
            measure,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeScore {
    pub name: String,
    pub commits: u64,
    pub aborts: u64,
    pub throughput: f64,
}

/// Measured performance of one agent function.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport {
    /// Version of the active function during the measurement.
    pub version: u64,
    /// Committed transactions per second.
    pub throughput: f64,
    pub abort_rate: f64,
    pub duration: f64,
    pub commits: u64,
    pub aborts: u64,
    pub per_type: Vec<TypeScore>,
}

impl ScoreReport {
    fn from_delta(d: &StatsSnapshot, secs: f64, version: u64, names: &[String]) -> Self {
        let secs = secs.max(1e-9);
        let attempts = d.commits + d.aborts;
        ScoreReport {
            version,
            throughput: d.commits as f64 / secs,
            abort_rate: if attempts == 0 {
                0.0
            } else {
                d.aborts as f64 / attempts as f64
            },
            duration: secs,
            commits: d.commits,
            aborts: d.aborts,
            per_type: names
                .iter()
                .enumerate()
                .map(|(i, n)| TypeScore {
                    name: n.clone(),
                    commits: d.type_commits[i],
                    aborts: d.type_aborts[i],
                    throughput: d.type_commits[i] as f64 / secs,
                })
                .collect(),
        }
    }

    pub fn csv_header(&self) -> String {
        let mut s = String::from("ts,version,throughput,abort_rate");
        for t in &self.per_type {
            let _ = write!(s, ",{}", t.name);
        }
        s
    }

    /// `ts,version,throughput,abort_rate,per_type...` with per-type
    /// throughputs in type order.
    pub fn csv_row(&self, ts: f64) -> String {
        let mut s = format!(
            "{ts:.3},{},{:.1},{:.4}",
            self.version, self.throughput, self.abort_rate
        );
        for t in &self.per_type {
            let _ = write!(s, ",{:.1}", t.throughput);
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub score: ScoreReport,
    /// `(seconds since start, committed txns/s over the last period)`.
    pub timeline: Vec<(f64, f64)>,
    pub stalled: bool,
    /// Counter deltas over the measurement window.
    pub stats: StatsSnapshot,
}

/// Runs `req` until it commits or `stop` is raised after an abort. Stored
/// procedures retry whole; interactive requests are re-issued op by op.
/// Aborted attempts sleep the type's backoff before retrying.
pub fn run_transaction(
    engine: &Engine,
    req: &TxnRequest,
    mode: Mode,
    stop: &AtomicBool,
    slot: Option<&Mutex<Option<Arc<TxnShared>>>>,
) -> TxnStatus {
    let ts = engine.next_timestamp();
    loop {
        let start_req = match mode {
            Mode::StoredProcedure => req.clone(),
            Mode::Interactive => TxnRequest {
                ops: Vec::new(),
                ..req.clone()
            },
        };
        let mut ctx = engine.begin_with_ts(start_req, mode, ts);
        if let Some(s) = slot {
            *s.lock() = Some(Arc::clone(ctx.shared()));
        }
        let mut failed = false;
        match mode {
            Mode::StoredProcedure => {
                while ctx.has_next() {
                    if ctx.execute_next().is_abort() {
                        failed = true;
                        break;
                    }
                }
            }
            Mode::Interactive => {
                for op in &req.ops {
                    if let ExecOutcome::Abort(_) = ctx.issue(*op) {
                        failed = true;
                        break;
                    }
                }
            }
        }
        if !failed && ctx.commit().is_ok() {
            return TxnStatus::Committed;
        }
        let backoff = ctx.transaction().function.backoff_us(req.txn_type);
        drop(ctx);
        if stop.load(Ordering::Relaxed) {
            return TxnStatus::Aborted;
        }
        if backoff > 0.0 {
            engine.stats.backoff_sleeps.fetch_add(1, Ordering::Relaxed);
            thread::sleep(Duration::from_secs_f64(backoff * 1e-6));
        }
    }
}

/// Drives `cfg.threads` workers over `w` against `engine`.
pub fn run(engine: &Arc<Engine>, w: &Arc<dyn Workload>, cfg: &RunConfig) -> RunReport {
    let stop = Arc::new(AtomicBool::new(false));
    let tickets = Arc::new(AtomicU64::new(0));
    let live = Arc::new(AtomicUsize::new(cfg.threads));
    let slots: Arc<Vec<Mutex<Option<Arc<TxnShared>>>>> =
        Arc::new((0..cfg.threads).map(|_| Mutex::new(None)).collect());
    let handles: Vec<_> = (0..cfg.threads)
        .map(|i| {
            let (engine, w, stop, tickets, live, slots) = (
                Arc::clone(engine),
                Arc::clone(w),
                Arc::clone(&stop),
                Arc::clone(&tickets),
                Arc::clone(&live),
                Arc::clone(&slots),
            );
            let (mode, max, seed) = (cfg.mode, cfg.max_txns, cfg.seed);
            thread::spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed, i as u64));
                while !stop.load(Ordering::Relaxed) {
                    if max.is_some_and(|m| tickets.fetch_add(1, Ordering::Relaxed) >= m) {
                        break;
                    }
                    let req = w.generate(&mut rng);
                    run_transaction(&engine, &req, mode, &stop, Some(&slots[i]));
                    *slots[i].lock() = None;
                }
                live.fetch_sub(1, Ordering::SeqCst);
            })
        })
        .collect();

    let start = Instant::now();
    let mut timeline = Vec::new();
    let mut stalled = false;
    let mut last_commits = engine.stats.commits.load(Ordering::Relaxed);
    let mut last_progress = Instant::now();
    let mut last_sample = (Instant::now(), last_commits);
    let tick = cfg
        .sample_every
        .map_or(Duration::from_millis(10), |s| s.min(Duration::from_millis(10)));
    let mut phase = |until: Instant| {
        while Instant::now() < until && live.load(Ordering::SeqCst) > 0 {
            thread::sleep(tick.min(until.saturating_duration_since(Instant::now())));
            let now = Instant::now();
            let c = engine.stats.commits.load(Ordering::Relaxed);
            if c != last_commits {
                last_commits = c;
                last_progress = now;
            } else if now - last_progress >= cfg.stall_after {
                log::warn!("no commit for {:?}; dooming running transactions", cfg.stall_after);
                stalled = true;
                for s in slots.iter() {
                    if let Some(t) = s.lock().as_ref() {
                        log::warn!(
                            "stalled {} progress {}/{} waiting on {:?}",
                            t.id,
                            t.progress(),
                            t.n_ops(),
                            t.waiting_on()
                        );
                        t.doom();
                    }
                }
                last_progress = now;
            }
            if let Some(every) = cfg.sample_every {
                if now - last_sample.0 >= every {
                    let dt = (now - last_sample.0).as_secs_f64();
                    timeline.push(((now - start).as_secs_f64(), (c - last_sample.1) as f64 / dt));
                    last_sample = (now, c);
                }
            }
        }
    };
    phase(start + cfg.warmup);
    let s0 = engine.stats.snapshot();
    let t0 = Instant::now();
    phase(t0 + cfg.measure);
    let s1 = engine.stats.snapshot();
    let secs = t0.elapsed().as_secs_f64();
    let version = engine.active_version();
    stop.store(true, Ordering::SeqCst);
    for h in handles {
        h.join().expect("worker panicked");
    }
    let delta = s1.since(&s0);
    let names: Vec<String> = engine.statics().types.iter().map(|t| t.name.clone()).collect();
    RunReport {
        score: ScoreReport::from_delta(&delta, secs, version, &names),
        timeline,
        stalled,
        stats: delta,
    }
}

/// Installs `f` and measures it.
pub fn evaluate_score(
    engine: &Arc<Engine>,
    w: &Arc<dyn Workload>,
    f: AgentFunction,
    cfg: &RunConfig,
) -> ScoreReport {
    engine.swap_active(f);
    run(engine, w, cfg).score
}

//! Acceptance criteria 1-14, one PASS/FAIL line each.
//!
//! Budgets are reduced by default so the suite finishes in a few minutes
//! on a small machine; `LEARNED_CC_FULL=1` runs the stated scale.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU32, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use common::*;
use learned_cc::agent::{encode_2pl, encode_asocc, encode_ic3, encode_occ, Action, AgentFunction, DetectionMode, FIFO_PRIORITY, INFINITE_TIMEOUT};
use learned_cc::cli::{baseline_function, Baseline};
use learned_cc::engine::{Mode, OpType};
use learned_cc::executor::{evaluate_score, run, AbortReason, Engine, ExecOutcome, RunConfig};
use learned_cc::features::{collect, default_selector, TABLE_CAP};
use learned_cc::graph::{build_full_graph, graph_reduction_search, SearchConfig};
use learned_cc::optimizer::{
    log_marginal_likelihood, propose_next, run_drift_demo, run_pipeline, ucb, DriftConfig, DriftDemoConfig,
    DriftDetector, Gp, Hyper, OptLog, PipelineConfig, UCB_LAMBDA,
};
use learned_cc::oracle::{check_commit_dag_acyclic, check_serializable, RecordLevel};
use learned_cc::workload::{Tpcc, TpccConfig, Workload, Zipf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

static LOGS: Mutex<Vec<OptLog>> = Mutex::new(Vec::new());

fn c1_safety() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut runs = 0;
    for i in 0..23usize {
        let w = ycsb(i % 4 + 1, 100);
        let s = w.static_ops();
        let sel = Arc::new(default_selector(1, s.max_ops()));
        let (name, f) = match i {
            0 => ("occ".to_string(), encode_occ(sel, 1)),
            1 => ("2pl".to_string(), encode_2pl(sel, 1).unwrap()),
            2 => ("ic3".to_string(), encode_ic3(sel, &s)),
            _ => (format!("random#{}", i - 3), random_function(&s, &mut rng)),
        };
        let engine = Arc::new(Engine::for_workload(w.as_ref(), f).with_recording(RecordLevel::Full));
        let cfg = RunConfig {
            stall_after: Duration::from_secs(1),
            ..RunConfig::counted(4, 10_000, 7 + i as u64)
        };
        let rep = run(&engine, &w, &cfg);
        let h = engine.take_history();
        ensure(h.txns.len() == 10_000, || format!("{name}: {} of 10000 committed", h.txns.len()))?;
        check_serializable(&h).map_err(|e| format!("{name}: {e}"))?;
        if rep.stalled {
            log::warn!("{name} needed the stall watchdog");
        }
        runs += 1;
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs <= 120.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{runs} runs x 10000 txns serializable in {secs:.1}s"))
}

/// Whether the helper thread that sets `done` is still blocked after `ms`.
fn blocked_after(done: &AtomicBool, ms: u64) -> bool {
    thread::sleep(Duration::from_millis(ms));
    !done.load(Ordering::SeqCst)
}

fn c2_scripted_schedules() -> Outcome {
    use OpType::{Read as R, Write as W};
    let shape = [R, W, R, W];
    let w = scripted_workload(&shape);
    let s = w.static_ops();
    let sel = Arc::new(default_selector(1, 4));
    let (a, b) = (1, 2);
    let t1_ops = [(R, a), (W, a), (R, b), (W, b)];
    let t2_ops = [(R, a), (W, a), (R, b), (W, b)];

    // (a) no detection: T2 fails its final validation
    let e = engine(&w, encode_occ(Arc::clone(&sel), 1));
    let mut t2 = e.begin(request(&t2_ops, 2), Mode::StoredProcedure);
    ensure(!t2.execute_next().is_abort(), || "occ: T2 read A".into())?;
    let mut t1 = e.begin(request(&t1_ops, 1), Mode::StoredProcedure);
    while t1.has_next() {
        ensure(!t1.execute_next().is_abort(), || "occ: T1 op".into())?;
    }
    t1.commit().map_err(|r| format!("occ: T1 {r:?}"))?;
    while t2.has_next() {
        ensure(!t2.execute_next().is_abort(), || "occ: T2 aborted before validation".into())?;
    }
    ensure(t2.commit() == Err(AbortReason::Validation), || "occ: T2 did not fail validation".into())?;

    // (d) detect all, infinite timeout: T2 blocks on A and commits after T1
    let e = engine(&w, AgentFunction::uniform(Arc::clone(&sel), 1, Action::new(DetectionMode::DetectAll, INFINITE_TIMEOUT, FIFO_PRIORITY, 1)));
    let done = AtomicBool::new(false);
    let r = thread::scope(|sc| -> Result<(), String> {
        let mut t1 = e.begin(request(&t1_ops, 1), Mode::StoredProcedure);
        t1.execute_next();
        t1.execute_next();
        let t1_id = t1.id();
        let h = sc.spawn(|| {
            let mut t2 = e.begin(request(&t2_ops, 2), Mode::StoredProcedure);
            let first = t2.execute_next();
            done.store(true, Ordering::SeqCst);
            while t2.has_next() {
                if t2.execute_next().is_abort() {
                    return Err("T2 aborted".to_string());
                }
            }
            let seq = t2.commit().map_err(|r| format!("T2 {r:?}"))?;
            Ok((first, seq))
        });
        let blocked = blocked_after(&done, 50);
        t1.execute_next();
        t1.execute_next();
        let s1 = t1.commit().map_err(|r| format!("T1 {r:?}"))?;
        let (first, s2) = h.join().unwrap()?;
        ensure(blocked, || "detect-all: T2 did not block on A".into())?;
        ensure(s2 > s1, || "detect-all: T2 serialized before T1".into())?;
        match first {
            ExecOutcome::Succeed(Some(v)) if v.writer == t1_id => Ok(()),
            other => Err(format!("detect-all: T2 read {other:?}, not T1's A")),
        }
    });
    r.map_err(|e| format!("detect-all: {e}"))?;

    // (c) detect critical with pipeline waits: T2 reads T1's A dirty, its
    // read of B is held back until T1 wrote B, both commit
    let e = engine(&w, encode_ic3(Arc::clone(&sel), &s));
    let progress = AtomicU32::new(0);
    let r = thread::scope(|sc| -> Result<(), String> {
        let mut t1 = e.begin(request(&t1_ops, 1), Mode::StoredProcedure);
        t1.execute_next();
        t1.execute_next();
        let t1_id = t1.id();
        let h = sc.spawn(|| {
            let mut t2 = e.begin(request(&t2_ops, 2), Mode::StoredProcedure);
            let mut reads = Vec::new();
            while t2.has_next() {
                match t2.execute_next() {
                    ExecOutcome::Abort(r) => return Err(format!("T2 aborted: {r:?}")),
                    ExecOutcome::Succeed(v) => reads.extend(v.map(|v| v.writer)),
                }
                progress.fetch_add(1, Ordering::SeqCst);
            }
            let seq = t2.commit().map_err(|r| format!("T2 {r:?}"))?;
            Ok((reads, seq))
        });
        thread::sleep(Duration::from_millis(50));
        let held = progress.load(Ordering::SeqCst);
        t1.execute_next();
        t1.execute_next();
        let s1 = t1.commit().map_err(|r| format!("T1 {r:?}"))?;
        let (reads, s2) = h.join().unwrap()?;
        ensure(held < 3, || format!("T2 ran {held} ops before T1 wrote B"))?;
        ensure(s2 > s1, || "T2 serialized before T1".into())?;
        ensure(reads == vec![t1_id, t1_id], || format!("T2 read from {reads:?}, expected T1 twice"))?;
        Ok(())
    });
    r.map_err(|e| format!("detect-critical: {e}"))?;
    Ok("no-detection aborts at validation; detect-all blocks then commits; detect-critical reorders and commits both".into())
}

fn c3_wait_die() -> Outcome {
    use OpType::{Read as R, Write as W};
    let w = scripted_workload(&[R, W, R, W]);
    let s = w.static_ops();
    let f = encode_2pl(Arc::new(default_selector(1, s.max_ops())), 1).unwrap();
    let e = engine(&w, f);
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut died, mut waited) = (0, 0);
    for trial in 0..1000u64 {
        let x = rng.gen_range(0..16);
        let (h_op, r_op) = match rng.gen_range(0..3) {
            0 => (W, R),
            1 => (R, W),
            _ => (W, W),
        };
        let older_requester = rng.gen_bool(0.5);
        let (ta, tb) = (e.next_timestamp(), e.next_timestamp());
        let (th, tr) = if older_requester { (tb, ta) } else { (ta, tb) };
        let mut h = e.begin_with_ts(request(&[(h_op, x)], trial), Mode::StoredProcedure, th);
        ensure(!h.execute_next().is_abort(), || format!("trial {trial}: holder aborted"))?;
        let done = AtomicBool::new(false);
        let res = thread::scope(|sc| -> Result<bool, String> {
            let j = sc.spawn(|| {
                let mut r = e.begin_with_ts(request(&[(r_op, x)], trial + 5000), Mode::StoredProcedure, tr);
                let out = r.execute_next();
                done.store(true, Ordering::SeqCst);
                let committed = !out.is_abort() && r.commit().is_ok();
                (out, committed)
            });
            let blocked = if older_requester {
                blocked_after(&done, 3)
            } else {
                // a younger requester must die without waiting
                let t0 = Instant::now();
                while !done.load(Ordering::SeqCst) && t0.elapsed() < Duration::from_secs(2) {
                    thread::yield_now();
                }
                !done.load(Ordering::SeqCst)
            };
            h.commit().map_err(|r| format!("holder {r:?}"))?;
            let (out, committed) = j.join().unwrap();
            if older_requester {
                ensure(blocked && committed, || format!("older requester blocked={blocked} committed={committed} ({out:?})"))?;
                Ok(false)
            } else {
                ensure(out == ExecOutcome::Abort(AbortReason::NoWait), || format!("younger requester got {out:?}"))?;
                Ok(true)
            }
        });
        match res.map_err(|m| format!("trial {trial}: {m}"))? {
            true => died += 1,
            false => waited += 1,
        }
    }
    Ok(format!("1000 conflicts: {died} younger requesters died, {waited} older requesters blocked then committed"))
}

fn c4_ic3_cycle_freedom() -> Outcome {
    let secs = if full_scale() { 30 } else { 5 };
    let w: Arc<dyn Workload> = Arc::new(Tpcc::new(TpccConfig::default()));
    let s = w.static_ops();
    let f = encode_ic3(Arc::new(default_selector(s.n_types() as u16, s.max_ops())), &s);
    let e = Arc::new(Engine::for_workload(w.as_ref(), f).with_recording(RecordLevel::DepsOnly));
    let cfg = RunConfig {
        stall_after: Duration::from_secs(5),
        ..RunConfig::timed(8, Duration::ZERO, Duration::from_secs(secs))
    };
    let rep = run(&e, &w, &cfg);
    let h = e.take_history();
    ensure(!rep.stalled, || "watchdog fired: no commit for 5s".into())?;
    check_commit_dag_acyclic(&h).map_err(|e| e.to_string())?;
    Ok(format!("{} committed in {secs}s, dependency graph acyclic, no stall", h.txns.len()))
}

/// Median throughput per function, measured round-robin on fresh engines
/// so slow drifts in machine speed hit every function alike.
fn measure_interleaved(w: &Arc<dyn Workload>, fs: &[AgentFunction], threads: usize, reps: usize) -> Vec<f64> {
    let mut tp = vec![Vec::new(); fs.len()];
    for r in 0..reps {
        for (i, f) in fs.iter().enumerate() {
            let e = engine(w, f.clone());
            let cfg = RunConfig {
                seed: 900 + r as u64,
                ..timed(threads, 300, 2000, Mode::StoredProcedure)
            };
            tp[i].push(run(&e, w, &cfg).score.throughput);
        }
    }
    tp.into_iter().map(median).collect()
}

fn c5_dominance() -> Outcome {
    let (budget, runs) = if full_scale() { (600, 3) } else { (120, 1) };
    let w = ycsb(1, 10_000);
    let s = w.static_ops();
    let baselines = [Baseline::TwoPl, Baseline::Occ, Baseline::Ic3];
    let mut fs: Vec<AgentFunction> = baselines.iter().map(|&b| baseline_function(&s, b)).collect();
    for r in 0..runs {
        let e = engine(&w, baseline_function(&s, Baseline::Ic3));
        let eval = timed(16, 100, 400, Mode::StoredProcedure);
        let cfg = PipelineConfig {
            seed: 50 + r,
            ..PipelineConfig::with_budget(Duration::from_secs(budget))
        };
        let res = run_pipeline(&s, baseline_function(&s, Baseline::Ic3), &cfg, &mut |f| {
            evaluate_score(&e, &w, f.clone(), &eval).throughput
        });
        LOGS.lock().unwrap().push(res.log.clone());
        fs.push(res.best);
    }
    let tp = measure_interleaved(&w, &fs, 16, 7);
    let best_base = tp[..3].iter().copied().fold(0.0, f64::max);
    let m = median(tp[3..].to_vec());
    let detail = format!(
        "learned median {m:.0} vs baselines {} over {runs} run(s) of {budget}s",
        baselines.iter().zip(&tp).map(|(b, t)| format!("{b:?}={t:.0}")).collect::<Vec<_>>().join(" ")
    );
    ensure(m >= 0.95 * best_base, || detail.clone())?;
    Ok(detail)
}

fn c6_monotone_logs() -> Outcome {
    let w: Arc<dyn Workload> = Arc::new(Tpcc::new(TpccConfig::default()));
    let s = w.static_ops();
    let init = baseline_function(&s, Baseline::Ic3);
    let e = engine(&w, init.clone());
    let eval = timed(4, 50, 150, Mode::StoredProcedure);
    let res = run_pipeline(&s, init, &PipelineConfig::with_budget(Duration::from_secs(15)), &mut |f| {
        evaluate_score(&e, &w, f.clone(), &eval).throughput
    });
    let mut logs = LOGS.lock().unwrap().clone();
    logs.push(res.log);
    for (i, l) in logs.iter().enumerate() {
        let back = OptLog::from_csv(&l.to_csv()).map_err(|e| format!("log {i}: {e}"))?;
        ensure(back.best_is_monotone() && l.best_is_monotone(), || format!("log {i} has a decreasing best score"))?;
    }
    let rows: usize = logs.iter().map(|l| l.rows.len()).sum();
    Ok(format!("{} logs, {rows} rows, best-score column non-decreasing", logs.len()))
}

fn c7_graph_search() -> Outcome {
    let budget = Duration::from_secs(if full_scale() { 120 } else { 20 });
    let w: Arc<dyn Workload> = Arc::new(Tpcc::new(TpccConfig::default()));
    let s = w.static_ops();
    let g = build_full_graph(&s);
    let init = baseline_function(&s, Baseline::Ic3);
    let e = engine(&w, init.clone());
    let eval = timed(8, 30, 150, Mode::StoredProcedure);
    let start = Instant::now();
    let cfg = SearchConfig {
        deadline: Some(start + budget),
        ..SearchConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut score = |f: &AgentFunction| evaluate_score(&e, &w, f.clone(), &eval).throughput;
    let s0 = score(&init);
    let res = graph_reduction_search(&g, init, s0, &cfg, &mut rng, &mut score);
    let took = start.elapsed();
    ensure(took <= budget + Duration::from_secs(2), || format!("ran {took:?} on a {budget:?} budget"))?;
    for st in &res.steps {
        ensure(st.child_size.0 <= st.parent_size.0 && st.child_size.1 <= st.parent_size.1, || {
            format!("round {}: child {:?} larger than parent {:?}", st.round, st.child_size, st.parent_size)
        })?;
    }
    Ok(format!(
        "{} evaluations, {} steps in {:.1}s; graph {}x{} shrank to {:?}",
        res.evaluations,
        res.steps.len(),
        took.as_secs_f64(),
        g.node_count(),
        g.edge_count(),
        g.effective_size(&res.best_mods)
    ))
}

fn c8_gp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    // (a) interpolation
    let x: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.gen()).collect()).collect();
    let y: Vec<f64> = x.iter().map(|p| (4.0 * p[0]).sin() + p[1] * p[2]).collect();
    let gp = Gp::with_hyper(x.clone(), &y, Hyper { length: 0.4, signal: 1.0, noise: 1e-8 });
    let worst = x
        .iter()
        .zip(&y)
        .map(|(p, t)| (gp.predict(p).0 - t).abs())
        .fold(0.0, f64::max);
    ensure(worst < 1e-6, || format!("interpolation error {worst:e}"))?;
    // (b) likelihood gradient against central differences
    let mut worst_rel = 0.0f64;
    for _ in 0..50 {
        let d = rng.gen_range(1..5);
        let n = rng.gen_range(3..15);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = [rng.gen_range(-1.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-4.0..-1.0)];
        let (_, grad) = log_marginal_likelihood(&x, &y, h);
        for k in 0..3 {
            let eps = 1e-5;
            let (mut hp, mut hm) = (h, h);
            hp[k] += eps;
            hm[k] -= eps;
            let fd = (log_marginal_likelihood(&x, &y, hp).0 - log_marginal_likelihood(&x, &y, hm).0) / (2.0 * eps);
            let rel = (grad[k] - fd).abs() / fd.abs().max(1e-3);
            worst_rel = worst_rel.max(rel);
        }
    }
    ensure(worst_rel < 1e-4, || format!("gradient relative error {worst_rel:e}"))?;
    // (c) every proposal beats the screened random candidates, and an
    // independent uniform sample too
    let mut calls = 0;
    for trial in 0..10 {
        let d = 1 + trial % 4;
        let n = 4 + trial;
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();
        let y: Vec<f64> = x.iter().map(|p| -p.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>()).collect();
        let gp = Gp::fit(x, &y);
        for _ in 0..3 {
            let p = propose_next(&gp, d, UCB_LAMBDA, &mut rng);
            let sample_best = (0..1000)
                .map(|_| ucb(&gp, &(0..d).map(|_| rng.gen()).collect::<Vec<f64>>(), UCB_LAMBDA))
                .fold(f64::NEG_INFINITY, f64::max);
            ensure(p.ucb >= p.screened_ucb - 1e-12, || format!("call {calls}: refinement lowered the UCB"))?;
            ensure(p.ucb >= sample_best - 1e-9, || format!("call {calls}: {:.6} below a uniform sample's {sample_best:.6}", p.ucb))?;
            calls += 1;
        }
    }
    Ok(format!("interpolation {worst:.1e}, gradient rel. err {worst_rel:.1e}, {calls} proposals at lambda {UCB_LAMBDA}"))
}

fn c9_drift_streams() -> Outcome {
    let cfg = DriftConfig::default();
    ensure(cfg.threshold == 0.10, || "default threshold is not 10%".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut false_triggers = 0;
    let mut d = DriftDetector::new(cfg);
    d.set_reference(1000.0);
    for _ in 0..1000 {
        if d.observe(1000.0 * (1.0 + rng.gen_range(-0.05..=0.05))) {
            false_triggers += 1;
        }
    }
    ensure(false_triggers == 0, || format!("{false_triggers} false triggers"))?;
    // step drops with the same noise, calibrated from scratch each time
    let mut delays = Vec::new();
    let mut missed = 0;
    for trial in 0..200 {
        let mut d = DriftDetector::new(cfg);
        let level = 500.0 + trial as f64;
        for _ in 0..4 {
            d.observe(level * (1.0 + rng.gen_range(-0.05..=0.05)));
        }
        match (1..=10).find(|_| d.observe(0.7 * level * (1.0 + rng.gen_range(-0.05..=0.05)))) {
            Some(k) => delays.push(k),
            None => missed += 1,
        }
    }
    let worst = delays.iter().copied().max().unwrap_or(usize::MAX);
    ensure(missed == 0 && worst <= 2, || format!("30% drop: missed {missed}, slowest detection {worst} windows"))?;
    Ok(format!("0/1000 false triggers; 200/200 30% drops caught within {worst} windows"))
}

fn c10_hot_path() -> Outcome {
    let w = ycsb(1, 10_000);
    let s = w.static_ops();
    let f = baseline_function(&s, Baseline::Ic3);
    let e = engine(&w, f.clone());
    let ctx = e.begin(request(&[(OpType::Read, 3)], 1), Mode::StoredProcedure);
    let tuple = e.store.tuple(key(3)).unwrap();
    let epoch = e.store.epoch();
    let n = 2_000_000;
    let t0 = Instant::now();
    let mut acc = 0u64;
    for i in 0..n {
        let op = if i & 1 == 0 { OpType::Read } else { OpType::Write };
        let raw = collect(ctx.transaction(), op, &tuple.stats, epoch);
        let a = f.get_cc(f.selector().select(&raw));
        acc = acc.wrapping_add(std::hint::black_box(a).waits.len() as u64);
    }
    let ns = t0.elapsed().as_nanos() as f64 / n as f64;
    std::hint::black_box(acc);
    let tpcc = Tpcc::new(TpccConfig::default()).static_ops();
    let sizes = [
        f.key_count(),
        baseline_function(&tpcc, Baseline::Ic3).key_count(),
        baseline_function(&tpcc, Baseline::TwoPl).key_count(),
    ];
    ensure(ns <= 1000.0, || format!("{ns:.0} ns per lookup"))?;
    ensure(sizes.iter().all(|&k| k <= TABLE_CAP as usize && k <= 1024), || format!("table sizes {sizes:?}"))?;
    Ok(format!("{ns:.0} ns per collect+select+get_cc; table rows {sizes:?}"))
}

fn c11_zipf() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut out = Vec::new();
    for theta in [0.0, 1.0] {
        let z = Zipf::new(10, theta);
        let mut counts = [0u64; 10];
        let draws = 1_000_000;
        for _ in 0..draws {
            counts[z.sample(&mut rng) as usize] += 1;
        }
        let norm: f64 = (1..=10).map(|k| (k as f64).powf(-theta)).sum();
        let tv = 0.5
            * (0..10)
                .map(|k| (counts[k] as f64 / draws as f64 - ((k + 1) as f64).powf(-theta) / norm).abs())
                .sum::<f64>();
        ensure(tv <= 0.01, || format!("theta {theta}: TV {tv:.4}"))?;
        out.push(format!("theta {theta}: TV {tv:.4}"));
    }
    Ok(out.join(", "))
}

fn c12_swap_liveness() -> Outcome {
    let secs = if full_scale() { 30 } else { 4 };
    let w = ycsb(1, 10_000);
    let s = w.static_ops();
    let mut rng = ChaCha8Rng::seed_from_u64(1212);
    let pool: Vec<AgentFunction> = vec![
        baseline_function(&s, Baseline::Ic3),
        baseline_function(&s, Baseline::Occ),
        baseline_function(&s, Baseline::TwoPl),
        random_function(&s, &mut rng),
        random_function(&s, &mut rng),
    ];
    let e = Arc::new(Engine::for_workload(w.as_ref(), pool[0].clone()).with_checksums());
    let cfg = RunConfig {
        stall_after: Duration::from_secs(1),
        ..RunConfig::timed(16, Duration::ZERO, Duration::from_secs(secs))
    };
    let before = e.stats.snapshot();
    let (e2, w2) = (Arc::clone(&e), Arc::clone(&w));
    let load = thread::spawn(move || run(&e2, &w2, &cfg));
    let mut swaps = 0;
    while !load.is_finished() {
        thread::sleep(Duration::from_millis(10));
        e.swap_active(pool[swaps % pool.len()].clone());
        swaps += 1;
    }
    let rep = load.join().unwrap();
    let d = e.stats.snapshot().since(&before);
    ensure(d.torn_functions == 0, || format!("{} torn reads", d.torn_functions))?;
    ensure(d.mixed_versions == 0, || format!("{} transactions mixed versions", d.mixed_versions))?;
    ensure(d.commits > 0 && swaps > 0, || "no progress".into())?;
    Ok(format!(
        "{swaps} swaps over {secs}s, {} commits, 0 torn, 0 mixed{}",
        d.commits,
        if rep.stalled { " (watchdog fired)" } else { "" }
    ))
}

fn c13_interactive() -> Outcome {
    let w = ycsb(2, 100);
    let s = w.static_ops();
    let mut rng = ChaCha8Rng::seed_from_u64(1313);
    let mut fs: Vec<(String, AgentFunction)> = [Baseline::Occ, Baseline::TwoPl, Baseline::Ic3, Baseline::Asocc]
        .into_iter()
        .map(|b| (format!("{b:?}"), baseline_function(&s, b)))
        .collect();
    for i in 0..4 {
        fs.push((format!("random#{i}"), random_function(&s, &mut rng)));
    }
    let hot = Arc::new(learned_cc::cli::baseline_selector(&s, Baseline::Asocc));
    fs.push(("asocc-direct".into(), encode_asocc(hot, 1, 0, 3).unwrap()));
    let mut total = 0;
    for (name, f) in fs {
        let e = Arc::new(Engine::for_workload(w.as_ref(), f).with_recording(RecordLevel::Full));
        let before = e.stats.snapshot();
        let cfg = RunConfig {
            mode: Mode::Interactive,
            stall_after: Duration::from_secs(1),
            ..RunConfig::counted(4, 2000, 13)
        };
        run(&e, &w, &cfg);
        let d = e.stats.snapshot().since(&before);
        ensure(d.dirty_appends == 0 && d.expose_events == 0 && d.dirty_reads == 0, || {
            format!("{name}: {} dirty versions, {} expose events, {} dirty reads", d.dirty_appends, d.expose_events, d.dirty_reads)
        })?;
        let h = e.take_history();
        check_serializable(&h).map_err(|err| format!("{name}: {err}"))?;
        total += h.txns.len();
    }
    Ok(format!("9 tables, {total} interactive commits, no dirty versions or exposes, oracle passes"))
}

fn c14_drift_restart() -> Outcome {
    let full = full_scale();
    let w = ycsb(1, 10_000);
    let s = w.static_ops();
    let cfg = DriftDemoConfig {
        phases: vec![1, 16, 4],
        windows_per_phase: if full { 12 } else { 8 },
        drift: if full {
            DriftConfig::default()
        } else {
            DriftConfig {
                window: Duration::from_millis(500),
                half_life: Duration::from_secs(1),
                ..DriftConfig::default()
            }
        },
        pipeline: PipelineConfig::with_budget(Duration::from_secs(if full { 60 } else { 8 })),
        eval: timed(1, 50, 150, Mode::StoredProcedure),
    };
    let report = run_drift_demo(&w, baseline_function(&s, Baseline::Ic3), &cfg);
    for l in &report.log {
        log::info!("{l}");
    }
    let restarts = report.optimizations.len().saturating_sub(1);
    ensure(
        report.optimizations.iter().all(|o| o.from_initial && o.stage1_start_all_false),
        || "an optimization started from a reduced graph".into(),
    )?;
    ensure(restarts >= 1 && restarts == report.triggers.len(), || {
        format!("{} triggers, {restarts} restarts over {} windows", report.triggers.len(), report.windows.len())
    })?;
    Ok(format!(
        "{} drift triggers, every stage-1 search started from the unmodified graph",
        report.triggers.len()
    ))
}

/// Straight to the stderr handle, which the test harness does not capture,
/// so the lines show up in a plain `cargo test` run.
fn report(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

#[test]
fn acceptance() {
    let _ = env_logger::builder().is_test(true).try_init();
    let criteria: [Criterion; 14] = [
        (1, "safety across protocols and random functions", c1_safety),
        (2, "scripted two-transaction schedules", c2_scripted_schedules),
        (3, "2PL wait-die conformance", c3_wait_die),
        (4, "IC3 initial function is cycle-free on TPC-C", c4_ic3_cycle_freedom),
        (5, "optimizer reaches the best baseline", c5_dominance),
        (6, "optimization logs are monotone", c6_monotone_logs),
        (7, "graph reduction terminates and shrinks", c7_graph_search),
        (8, "Gaussian process correctness", c8_gp),
        (9, "drift detection on synthetic streams", c9_drift_streams),
        (10, "hot-path lookup cost and table size", c10_hot_path),
        (11, "Zipf sampler distribution", c11_zipf),
        (12, "function swap liveness", c12_swap_liveness),
        (13, "interactive-mode restrictions", c13_interactive),
        (14, "drift restarts from the full graph", c14_drift_restart),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (n, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let t0 = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t0.elapsed().as_secs_f64();
        match out {
            Ok(d) => report(&format!("criterion {n:>2} PASS ({secs:.1}s) {name}: {d}")),
            Err(d) => {
                report(&format!("criterion {n:>2} FAIL ({secs:.1}s) {name}: {d}"));
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

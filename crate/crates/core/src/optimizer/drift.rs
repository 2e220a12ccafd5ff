use std::sync::Arc;
use std::time::Duration;

use super::pipeline::{run_pipeline, PipelineConfig};
use crate::agent::AgentFunction;
use crate::executor::{evaluate_score, run, Engine, RunConfig};
use crate::workload::Workload;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftConfig {
    /// Relative deviation from the reference that counts as drift.
    pub threshold: f64,
    pub half_life: Duration,
    /// Length of one throughput observation.
    pub window: Duration,
    /// Observations averaged into the reference after a reset.
    pub reference_windows: usize,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            threshold: 0.10,
            half_life: Duration::from_secs(5),
            window: Duration::from_millis(2500),
            reference_windows: 4,
        }
    }
}

/// Exponentially smoothed throughput compared against a reference level.
#[derive(Clone, Debug)]
pub struct DriftDetector {
    cfg: DriftConfig,
    alpha: f64,
    reference: Option<f64>,
    calibration: Vec<f64>,
    ewma: Option<f64>,
}

impl DriftDetector {
    pub fn new(cfg: DriftConfig) -> Self {
        let ratio = cfg.window.as_secs_f64() / cfg.half_life.as_secs_f64().max(1e-9);
        DriftDetector {
            alpha: 1.0 - 0.5f64.powf(ratio),
            cfg,
            reference: None,
            calibration: Vec::new(),
            ewma: None,
        }
    }

    pub fn config(&self) -> &DriftConfig {
        &self.cfg
    }

    /// Smoothing weight of the newest observation.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn reference(&self) -> Option<f64> {
        self.reference
    }

    pub fn ewma(&self) -> Option<f64> {
        self.ewma
    }

    pub fn set_reference(&mut self, r: f64) {
        self.reference = Some(r);
        self.ewma = Some(r);
        self.calibration.clear();
    }

    /// Forgets the reference; the next observations recalibrate it.
    pub fn reset(&mut self) {
        self.reference = None;
        self.ewma = None;
        self.calibration.clear();
    }

    pub fn deviation(&self) -> Option<f64> {
        match (self.reference, self.ewma) {
            (Some(r), Some(e)) if r > 0.0 => Some((e - r).abs() / r),
            _ => None,
        }
    }

    /// Feeds one window's throughput; true when drift is detected.
    pub fn observe(&mut self, x: f64) -> bool {
        if self.reference.is_none() {
            self.calibration.push(x);
            if self.calibration.len() >= self.cfg.reference_windows.max(1) {
                let r = self.calibration.iter().sum::<f64>() / self.calibration.len() as f64;
                self.set_reference(r);
            }
            return false;
        }
        let e = self.ewma.expect("set with the reference");
        self.ewma = Some(self.alpha * x + (1.0 - self.alpha) * e);
        self.deviation().is_some_and(|d| d > self.cfg.threshold)
    }
}

#[derive(Clone, Debug)]
pub struct DriftDemoConfig {
    /// Worker threads per phase.
    pub phases: Vec<usize>,
    pub windows_per_phase: usize,
    pub drift: DriftConfig,
    pub pipeline: PipelineConfig,
    /// How each candidate function is measured during optimization.
    pub eval: RunConfig,
}

impl Default for DriftDemoConfig {
    fn default() -> Self {
        DriftDemoConfig {
            phases: vec![1, 16, 4],
            windows_per_phase: 12,
            drift: DriftConfig::default(),
            pipeline: PipelineConfig::with_budget(Duration::from_secs(60)),
            eval: RunConfig::timed(1, Duration::from_millis(100), Duration::from_millis(400)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reoptimization {
    pub phase: usize,
    pub threads: usize,
    /// Started from the initial function rather than the learned one.
    pub from_initial: bool,
    pub stage1_start_all_false: bool,
    pub initial_score: f64,
    pub best_score: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftEvent {
    pub phase: usize,
    pub window: usize,
    pub throughput: f64,
    pub ewma: f64,
    pub reference: f64,
}

#[derive(Clone, Debug, Default)]
pub struct DriftDemoReport {
    pub triggers: Vec<DriftEvent>,
    pub optimizations: Vec<Reoptimization>,
    /// `(phase, window, throughput)` for every monitoring window.
    pub windows: Vec<(usize, usize, f64)>,
    pub log: Vec<String>,
}

/// Optimizes under the first phase's thread count, then monitors each
/// phase window by window. A trigger discards the optimization history
/// and reruns the whole pipeline from `initial` under the current load.
pub fn run_drift_demo(w: &Arc<dyn Workload>, initial: AgentFunction, cfg: &DriftDemoConfig) -> DriftDemoReport {
    let statics = w.static_ops();
    let engine = Arc::new(Engine::for_workload(w.as_ref(), initial.clone()));
    let mut report = DriftDemoReport::default();
    let mut detector = DriftDetector::new(cfg.drift);
    let mut seed = cfg.pipeline.seed;

    let mut optimize = |phase: usize, threads: usize, report: &mut DriftDemoReport| {
        let eval = RunConfig {
            threads,
            ..cfg.eval.clone()
        };
        let pcfg = PipelineConfig {
            seed,
            ..cfg.pipeline.clone()
        };
        seed += 1;
        let res = run_pipeline(&statics, initial.clone(), &pcfg, &mut |f| {
            evaluate_score(&engine, w, f.clone(), &eval).throughput
        });
        let line = format!(
            "phase {phase} threads {threads}: optimization from initial function, stage1 start mods={}, best {:.1} after {} evaluations",
            if res.stage1_start_all_false { "all-false" } else { "reduced" },
            res.best_score,
            res.records.len()
        );
        log::info!("{line}");
        report.log.push(line);
        report.optimizations.push(Reoptimization {
            phase,
            threads,
            from_initial: true,
            stage1_start_all_false: res.stage1_start_all_false,
            initial_score: res.initial_score,
            best_score: res.best_score,
            evaluations: res.records.len(),
        });
        engine.swap_active(res.best);
    };

    optimize(0, cfg.phases[0], &mut report);
    for (phase, &threads) in cfg.phases.iter().enumerate() {
        let line = format!("phase {phase}: {threads} threads");
        log::info!("{line}");
        report.log.push(line);
        for window in 0..cfg.windows_per_phase {
            let rc = RunConfig::timed(threads, Duration::ZERO, cfg.drift.window);
            let tp = run(&engine, w, &rc).score.throughput;
            report.windows.push((phase, window, tp));
            if detector.observe(tp) {
                let ev = DriftEvent {
                    phase,
                    window,
                    throughput: tp,
                    ewma: detector.ewma().unwrap_or(tp),
                    reference: detector.reference().unwrap_or(tp),
                };
                let line = format!(
                    "drift at phase {phase} window {window}: smoothed {:.1} vs reference {:.1}",
                    ev.ewma, ev.reference
                );
                log::info!("{line}");
                report.log.push(line);
                report.triggers.push(ev);
                optimize(phase, threads, &mut report);
                detector.reset();
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_windows_per_half_life() {
        let d = DriftDetector::new(DriftConfig::default());
        assert!((d.alpha() - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn calibrates_reference_from_first_windows() {
        let mut d = DriftDetector::new(DriftConfig::default());
        for x in [90.0, 110.0, 100.0, 100.0] {
            assert!(!d.observe(x));
        }
        assert_eq!(d.reference(), Some(100.0));
    }

    #[test]
    fn noisy_stable_stream_never_triggers() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut d = DriftDetector::new(DriftConfig::default());
        d.set_reference(1000.0);
        let fired = (0..1000)
            .filter(|_| d.observe(1000.0 * (1.0 + rng.gen_range(-0.05..=0.05))))
            .count();
        assert_eq!(fired, 0);
    }

    #[test]
    fn step_drop_triggers_on_second_window() {
        let mut d = DriftDetector::new(DriftConfig::default());
        d.set_reference(1000.0);
        assert!(!d.observe(700.0));
        assert!(d.observe(700.0));
    }
}

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::acq::UCB_LAMBDA;
use super::bo::{bo_stage, BoConfig, EvaluationRecord, StopRule};
use super::param::{ParamKind, ParamSpace};
use crate::agent::AgentFunction;
use crate::graph::{build_full_graph, graph_reduction_search, ConflictGraph, SearchConfig, SearchStep};
use crate::workload::StaticWorkload;

#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub stage: u8,
    pub score: f64,
    pub best_score: f64,
    pub wall_s: f64,
}

/// One row per evaluation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptLog {
    pub rows: Vec<LogRow>,
}

impl OptLog {
    pub const HEADER: &'static str = "iter,stage,score,best_score,wall_s";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.3},{:.3},{:.3}",
                r.iter, r.stage, r.score, r.best_score, r.wall_s
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(Self::HEADER) {
            return Err("missing optimization log header".into());
        }
        let mut rows = Vec::new();
        for (n, l) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || format!("line {}: {l:?}", n + 2);
            let v: Vec<&str> = l.split(',').collect();
            if v.len() != 5 {
                return Err(bad());
            }
            rows.push(LogRow {
                iter: v[0].parse().map_err(|_| bad())?,
                stage: v[1].parse().map_err(|_| bad())?,
                score: v[2].parse().map_err(|_| bad())?,
                best_score: v[3].parse().map_err(|_| bad())?,
                wall_s: v[4].parse().map_err(|_| bad())?,
            });
        }
        Ok(OptLog { rows })
    }

    pub fn best_is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].best_score >= w[0].best_score)
    }
}

/// Scores candidate functions and keeps the best-so-far, the records and
/// the log in step.
pub struct Tracker<'a> {
    score: &'a mut dyn FnMut(&AgentFunction) -> f64,
    pub records: Vec<EvaluationRecord>,
    pub best: AgentFunction,
    pub best_score: f64,
    pub log: OptLog,
    start: Instant,
    best_at: f64,
}

impl<'a> Tracker<'a> {
    pub fn new(initial: AgentFunction, score: &'a mut dyn FnMut(&AgentFunction) -> f64) -> Self {
        Tracker {
            score,
            records: Vec::new(),
            best: initial,
            best_score: f64::NEG_INFINITY,
            log: OptLog::default(),
            start: Instant::now(),
            best_at: 0.0,
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    /// A score that would beat the incumbent is measured a second time and
    /// the mean kept, so a single lucky run does not become the best.
    pub fn evaluate(&mut self, f: AgentFunction, stage: u8, param: Vec<f64>) -> f64 {
        let mut s = (self.score)(&f);
        if s > self.best_score && self.best_score.is_finite() {
            s = 0.5 * (s + (self.score)(&f));
        }
        let wall_s = self.elapsed();
        if s > self.best_score {
            self.best_score = s;
            self.best = f.clone();
            self.best_at = wall_s;
        }
        self.log.rows.push(LogRow {
            iter: self.records.len(),
            stage,
            score: s,
            best_score: self.best_score,
            wall_s,
        });
        log::info!("eval {} stage {stage} score {s:.1} best {:.1}", self.records.len(), self.best_score);
        self.records.push(EvaluationRecord {
            function: Arc::new(f),
            param,
            score: s,
            stage,
            wall_s,
        });
        s
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub budget: Duration,
    pub seed: u64,
    pub lambda: f64,
    pub stage1: SearchConfig,
    pub stage3: SearchConfig,
    /// Stage-2 stop: evaluations without improvement.
    pub stage2_patience: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            budget: Duration::from_secs(600),
            seed: 1,
            lambda: UCB_LAMBDA,
            stage1: SearchConfig::default(),
            stage3: SearchConfig {
                k: 8,
                ..SearchConfig::default()
            },
            stage2_patience: 20,
        }
    }
}

impl PipelineConfig {
    pub fn with_budget(budget: Duration) -> Self {
        PipelineConfig {
            budget,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub best: AgentFunction,
    pub best_score: f64,
    pub initial_score: f64,
    pub log: OptLog,
    pub records: Vec<EvaluationRecord>,
    /// Stages that ran to their own stop rule.
    pub stages_completed: Vec<u8>,
    /// Seconds until the final best was first measured.
    pub time_to_best: f64,
    /// Whether the first graph search began from the unmodified graph.
    pub stage1_start_all_false: bool,
    pub search_steps: Vec<SearchStep>,
}

/// Graph reduction from the current best; returns whether it started from
/// the unmodified graph, and its steps.
fn search_stage(
    g: &ConflictGraph,
    search: &SearchConfig,
    stage: u8,
    deadline: Instant,
    tracker: &mut Tracker<'_>,
    rng: &mut ChaCha8Rng,
) -> (bool, Vec<SearchStep>) {
    let cfg = SearchConfig {
        deadline: Some(deadline),
        ..search.clone()
    };
    let start = tracker.best.clone();
    let start_score = tracker.best_score;
    let res = graph_reduction_search(g, start, start_score, &cfg, rng, &mut |f| {
        tracker.evaluate(f.clone(), stage, Vec::new())
    });
    (res.start.is_all_false(), res.steps)
}

/// Four stages: graph reduction (population 4), BO over timeouts and
/// backoffs, graph reduction (population 8), BO over everything until the
/// budget runs out. Stage 0 in the log is the initial function's score.
pub fn run_pipeline(
    statics: &StaticWorkload,
    initial: AgentFunction,
    cfg: &PipelineConfig,
    score: &mut dyn FnMut(&AgentFunction) -> f64,
) -> PipelineResult {
    let deadline = Instant::now() + cfg.budget;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let g = build_full_graph(statics);
    let mut tracker = Tracker::new(initial.clone(), score);
    let initial_score = tracker.evaluate(initial, 0, Vec::new());
    let mut completed = Vec::new();
    let mut steps = Vec::new();
    let out_of_time = || Instant::now() >= deadline;

    let (stage1_start_all_false, first) = search_stage(&g, &cfg.stage1, 1, deadline, &mut tracker, &mut rng);
    log::info!(
        "stage 1 start mods={}",
        if stage1_start_all_false { "all-false" } else { "reduced" }
    );
    steps.extend(first);
    'stages: {
        if out_of_time() {
            break 'stages;
        }
        completed.push(1);

        let space = ParamSpace::new(ParamKind::Timeouts, &tracker.best, statics);
        log::info!("stage 2: {} timeout/backoff parameters", space.dim());
        let bo = BoConfig {
            lambda: cfg.lambda,
            stop: StopRule::NoImprovement(cfg.stage2_patience),
            deadline: Some(deadline),
            max_evals: None,
        };
        bo_stage(&space, &bo, 2, &mut tracker, &mut rng);
        if out_of_time() {
            break 'stages;
        }
        completed.push(2);

        steps.extend(search_stage(&g, &cfg.stage3, 3, deadline, &mut tracker, &mut rng).1);
        if out_of_time() {
            break 'stages;
        }
        completed.push(3);

        let space = ParamSpace::new(ParamKind::All, &tracker.best, statics);
        log::info!("stage 4: {} parameters", space.dim());
        let bo = BoConfig {
            stop: StopRule::Budget,
            ..bo
        };
        bo_stage(&space, &bo, 4, &mut tracker, &mut rng);
        completed.push(4);
    }

    PipelineResult {
        best_score: tracker.best_score,
        time_to_best: tracker.best_at,
        best: tracker.best,
        initial_score,
        log: tracker.log,
        records: tracker.records,
        stages_completed: completed,
        stage1_start_all_false,
        search_steps: steps,
    }
}

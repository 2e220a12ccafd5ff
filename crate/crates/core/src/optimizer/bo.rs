use std::sync::Arc;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;

use super::acq::propose_next;
use super::gp::Gp;
use super::param::ParamSpace;
use super::pipeline::Tracker;
use crate::agent::AgentFunction;

/// Most recent records the surrogate is fitted to.
pub const GP_WINDOW: usize = 200;

#[derive(Clone, Debug)]
pub struct EvaluationRecord {
    pub function: Arc<AgentFunction>,
    /// Encoding in the space of the stage that produced it; empty for
    /// graph-search evaluations.
    pub param: Vec<f64>,
    pub score: f64,
    pub stage: u8,
    /// Seconds since the optimization started.
    pub wall_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    /// Stop after this many consecutive evaluations without a new best.
    NoImprovement(usize),
    /// Run until the deadline or evaluation cap.
    Budget,
}

#[derive(Clone, Debug)]
pub struct BoConfig {
    pub lambda: f64,
    pub stop: StopRule,
    pub deadline: Option<Instant>,
    pub max_evals: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct BoOutcome {
    pub evaluations: usize,
    pub best_x: Option<Vec<f64>>,
    pub best_y: f64,
}

/// Surrogate-driven maximization of `objective` over `[0,1]^dim`, seeded
/// with already evaluated points.
pub fn bo_maximize(
    dim: usize,
    seed_points: Vec<(Vec<f64>, f64)>,
    cfg: &BoConfig,
    rng: &mut ChaCha8Rng,
    objective: &mut dyn FnMut(&[f64]) -> f64,
) -> BoOutcome {
    let mut pts = seed_points;
    let mut out = BoOutcome {
        evaluations: 0,
        best_x: None,
        best_y: pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    };
    let mut stale = 0;
    loop {
        if cfg.deadline.is_some_and(|d| Instant::now() >= d) || cfg.max_evals.is_some_and(|m| out.evaluations >= m) {
            break;
        }
        let from = pts.len().saturating_sub(GP_WINDOW);
        let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = pts[from..].iter().cloned().unzip();
        let gp = Gp::fit(xs, &ys);
        let p = propose_next(&gp, dim, cfg.lambda, rng);
        let y = objective(&p.x);
        out.evaluations += 1;
        if y > out.best_y {
            out.best_y = y;
            out.best_x = Some(p.x.clone());
            stale = 0;
        } else {
            stale += 1;
        }
        pts.push((p.x, y));
        if let StopRule::NoImprovement(n) = cfg.stop {
            if stale >= n {
                break;
            }
        }
    }
    out
}

/// One Bayesian-optimization stage over `space`. Every earlier record seeds
/// the surrogate; candidates are decoded on top of the current best.
pub fn bo_stage(
    space: &ParamSpace,
    cfg: &BoConfig,
    stage: u8,
    tracker: &mut Tracker<'_>,
    rng: &mut ChaCha8Rng,
) -> BoOutcome {
    let seed: Vec<(Vec<f64>, f64)> = tracker
        .records
        .iter()
        .map(|r| (space.encode(&r.function), r.score))
        .collect();
    let base = tracker.best.clone();
    bo_maximize(space.dim(), seed, cfg, rng, &mut |x| {
        let f = space.decode(x, &base);
        tracker.evaluate(f, stage, x.to_vec())
    })
}

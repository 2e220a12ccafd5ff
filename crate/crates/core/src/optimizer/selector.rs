//! Search over feature selectors, each scored by a short pipeline run.

use std::collections::HashMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::acq::ucb;
use super::bo::{bo_maximize, BoConfig, StopRule};
use super::gp::Gp;
use crate::features::{Feature, FeatureSelector, FeatureSpec, Transform, FEATURE_COUNT, TABLE_CAP};

/// Two coordinates per feature: include bit and transform choice.
pub const SELECTOR_DIM: usize = 2 * FEATURE_COUNT;

#[derive(Clone, Debug)]
pub enum SelectorSpace {
    /// A fixed list; evaluated in surrogate order, each at most once.
    Candidates(Vec<FeatureSelector>),
    /// Any subset of features. `template` supplies bucket counts and ranges
    /// for a feature once it is switched on.
    Relaxed { template: [FeatureSpec; FEATURE_COUNT] },
}

#[derive(Clone, Debug)]
pub struct SelectorSearchConfig {
    pub lambda: f64,
    pub max_evals: usize,
    pub deadline: Option<Instant>,
    pub seed: u64,
}

impl Default for SelectorSearchConfig {
    fn default() -> Self {
        SelectorSearchConfig {
            lambda: super::acq::UCB_LAMBDA,
            max_evals: 12,
            deadline: None,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SelectorResult {
    pub best: FeatureSelector,
    pub best_score: f64,
    /// Every distinct selector evaluated, best first.
    pub ranking: Vec<(FeatureSelector, f64)>,
    pub evaluations: usize,
}

fn transform_code(t: Transform) -> f64 {
    match t {
        Transform::Linear => 0.0,
        Transform::Sqrt => 0.5,
        Transform::Log => 1.0,
    }
}

pub fn encode_selector(sel: &FeatureSelector) -> Vec<f64> {
    sel.features
        .iter()
        .flat_map(|s| [if s.include { 1.0 } else { 0.0 }, transform_code(s.transform)])
        .collect()
}

/// Rounds a relaxed point to a selector. Numeric bucket counts are halved,
/// largest first, until the table fits; `None` if nothing is included or
/// the categorical features alone overflow the cap.
pub fn decode_selector(x: &[f64], template: &[FeatureSpec; FEATURE_COUNT], id: u32) -> Option<FeatureSelector> {
    let mut features = [FeatureSpec::excluded(); FEATURE_COUNT];
    for f in Feature::ALL {
        let i = f.index();
        if x[2 * i] < 0.5 {
            continue;
        }
        let mut spec = template[i];
        spec.include = true;
        if !f.is_categorical() {
            spec.transform = Transform::ALL[((x[2 * i + 1] * 3.0) as usize).min(2)];
        }
        features[i] = spec;
    }
    if features.iter().all(|s| !s.include) {
        return None;
    }
    let states = |fs: &[FeatureSpec; FEATURE_COUNT]| -> u64 {
        fs.iter().filter(|s| s.include).map(|s| s.buckets as u64).product()
    };
    while states(&features) > TABLE_CAP as u64 {
        let widest = Feature::ALL
            .into_iter()
            .filter(|f| !f.is_categorical() && features[f.index()].include && features[f.index()].buckets > 1)
            .max_by_key(|f| features[f.index()].buckets)?;
        let s = &mut features[widest.index()];
        s.buckets = s.buckets.div_ceil(2);
    }
    FeatureSelector::new(id, features).ok()
}

/// Short human-readable list of included features, e.g. `txn_type+op_index`.
pub fn describe_selector(sel: &FeatureSelector) -> String {
    sel.included().map(|f| f.name()).collect::<Vec<_>>().join("+")
}

/// Bayesian optimization over selector encodings. `evaluate` is expected
/// to run a full (short-budget) optimization with the selector and return
/// the learned function's score.
pub fn optimize_feature_selector(
    space: &SelectorSpace,
    cfg: &SelectorSearchConfig,
    evaluate: &mut dyn FnMut(&FeatureSelector) -> f64,
) -> SelectorResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seen: HashMap<String, (FeatureSelector, f64)> = HashMap::new();
    let mut evaluations = 0;
    let out_of_time = || cfg.deadline.is_some_and(|d| Instant::now() >= d);

    match space {
        SelectorSpace::Candidates(cands) => {
            let enc: Vec<Vec<f64>> = cands.iter().map(encode_selector).collect();
            let mut done: Vec<Option<f64>> = vec![None; cands.len()];
            while evaluations < cfg.max_evals && !out_of_time() {
                let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = done
                    .iter()
                    .enumerate()
                    .filter_map(|(i, s)| s.map(|s| (enc[i].clone(), s)))
                    .unzip();
                let gp = Gp::fit(xs, &ys);
                let next = (0..cands.len())
                    .filter(|&i| done[i].is_none())
                    .max_by(|&a, &b| ucb(&gp, &enc[a], cfg.lambda).total_cmp(&ucb(&gp, &enc[b], cfg.lambda)));
                let Some(i) = next else { break };
                let s = evaluate(&cands[i]);
                evaluations += 1;
                done[i] = Some(s);
                seen.insert(format!("{i}"), (cands[i].clone(), s));
            }
        }
        SelectorSpace::Relaxed { template } => {
            let bo = BoConfig {
                lambda: cfg.lambda,
                stop: StopRule::Budget,
                deadline: cfg.deadline,
                max_evals: Some(cfg.max_evals),
            };
            let mut next_id = 100;
            bo_maximize(SELECTOR_DIM, Vec::new(), &bo, &mut rng, &mut |x| {
                let Some(sel) = decode_selector(x, template, next_id) else {
                    // unusable encodings score as the worst selector seen
                    return seen.values().map(|v| v.1).fold(f64::INFINITY, f64::min).min(0.0);
                };
                let key = FeatureSelector { id: 0, ..sel.clone() }.to_text();
                if let Some((_, s)) = seen.get(&key) {
                    return *s;
                }
                next_id += 1;
                let s = evaluate(&sel);
                evaluations += 1;
                seen.insert(key, (sel, s));
                s
            });
        }
    }

    let mut ranking: Vec<(FeatureSelector, f64)> = seen.into_values().collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (best, best_score) = ranking.first().cloned().expect("at least one selector evaluated");
    SelectorResult {
        best,
        best_score,
        ranking,
        evaluations,
    }
}

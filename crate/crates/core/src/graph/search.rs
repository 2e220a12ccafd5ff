use std::collections::HashSet;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{update_wait_actions, ConflictGraph, Modifications, Node};
use crate::agent::AgentFunction;

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Children per parent per round.
    pub branch_factor: usize,
    /// Per-flag flip probability.
    pub mutate_rate: f64,
    /// Population size kept after each round.
    pub k: usize,
    /// Attempts at producing an unseen child before the parent is dropped.
    pub max_try: usize,
    /// Rounds without a population change before stopping.
    pub max_step: usize,
    pub deadline: Option<Instant>,
    pub max_evals: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            branch_factor: 4,
            mutate_rate: 0.05,
            k: 4,
            max_try: 16,
            max_step: 3,
            deadline: None,
            max_evals: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Individual {
    pub mods: Modifications,
    pub score: f64,
}

/// One evaluated child, with the effective graph sizes of it and its parent.
#[derive(Clone, Debug)]
pub struct SearchStep {
    pub round: usize,
    pub parent_size: (usize, usize),
    pub child_size: (usize, usize),
    pub child_is_superset: bool,
    pub score: f64,
    pub best_score: f64,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best: AgentFunction,
    pub best_score: f64,
    pub best_mods: Modifications,
    pub start: Modifications,
    pub evaluations: usize,
    pub rounds: usize,
    pub steps: Vec<SearchStep>,
    pub population: Vec<Individual>,
}

/// Sets each still-false flag of a learned type with probability `prob`.
/// Flags never go back to false, so the reduced graph only shrinks.
pub fn flip(g: &ConflictGraph, mods: &Modifications, prob: f64, rng: &mut ChaCha8Rng) -> Modifications {
    let mut out = mods.clone();
    for n in g.nodes() {
        if !g.is_learned(n.txn_type) {
            continue;
        }
        if n.op_index < g.op_count(n.txn_type) && !out.merged(n) && rng.gen_bool(prob) {
            out.set_merged(n, true);
        }
        if !out.cut(n) && rng.gen_bool(prob) {
            out.set_cut(n, true);
        }
    }
    out
}

/// Flips `mods`, derives the matching function from `best.0` and scores
/// it, replacing `best` when the child wins.
pub fn mutate(
    g: &ConflictGraph,
    mods: &Modifications,
    prob: f64,
    best: &mut (AgentFunction, f64),
    rng: &mut ChaCha8Rng,
    score: &mut dyn FnMut(&AgentFunction) -> f64,
) -> (Modifications, AgentFunction, f64) {
    let child = flip(g, mods, prob, rng);
    let f = update_wait_actions(g, &child, &best.0);
    let s = score(&f);
    if s > best.1 {
        *best = (f.clone(), s);
    }
    (child, f, s)
}

/// Evolutionary search over merge/cut flags starting from the unmodified
/// graph. `f_best` is the function being refined and `initial_score` its
/// measured score; the best function seen is returned.
pub fn graph_reduction_search(
    g: &ConflictGraph,
    f_best: AgentFunction,
    initial_score: f64,
    cfg: &SearchConfig,
    rng: &mut ChaCha8Rng,
    score: &mut dyn FnMut(&AgentFunction) -> f64,
) -> SearchResult {
    let start = Modifications::all_false(g);
    let mut best = (f_best, initial_score);
    let mut best_mods = start.clone();
    let mut result = SearchResult {
        best: best.0.clone(),
        best_score: initial_score,
        best_mods: start.clone(),
        start: start.clone(),
        evaluations: 0,
        rounds: 0,
        steps: Vec::new(),
        population: Vec::new(),
    };
    if g.edge_count() == 0 {
        result.population.push(Individual {
            mods: start,
            score: initial_score,
        });
        result.rounds = 1;
        return result;
    }
    let mut seen: HashSet<String> = HashSet::from([start.fingerprint()]);
    let mut pop = vec![Individual {
        mods: start.clone(),
        score: initial_score,
    }];
    let mut unchanged = 0;
    let out_of_budget = |evals: usize| {
        cfg.deadline.is_some_and(|d| Instant::now() >= d) || cfg.max_evals.is_some_and(|m| evals >= m)
    };
    'outer: while !pop.is_empty() {
        result.rounds += 1;
        let mut next = pop.clone();
        for parent in &pop {
            let parent_size = g.effective_size(&parent.mods);
            for _ in 0..cfg.branch_factor {
                if out_of_budget(result.evaluations) {
                    pop = top_k(next, cfg.k);
                    break 'outer;
                }
                let mut child = None;
                for _ in 0..cfg.max_try {
                    let c = flip(g, &parent.mods, cfg.mutate_rate, rng);
                    if seen.insert(c.fingerprint()) {
                        child = Some(c);
                        break;
                    }
                }
                let Some(child) = child else {
                    let fp = parent.mods.fingerprint();
                    next.retain(|i| i.mods.fingerprint() != fp);
                    break;
                };
                let f = update_wait_actions(g, &child, &best.0);
                let s = score(&f);
                result.evaluations += 1;
                if s > best.1 {
                    best = (f, s);
                    best_mods = child.clone();
                }
                log::debug!("graph search round {} child score {s:.1} best {:.1}", result.rounds, best.1);
                result.steps.push(SearchStep {
                    round: result.rounds,
                    parent_size,
                    child_size: g.effective_size(&child),
                    child_is_superset: parent.mods.is_subset_of(&child),
                    score: s,
                    best_score: best.1,
                });
                next.push(Individual { mods: child, score: s });
            }
        }
        let next = top_k(next, cfg.k);
        if fingerprints(&next) == fingerprints(&pop) {
            unchanged += 1;
        } else {
            unchanged = 0;
        }
        pop = next;
        if unchanged >= cfg.max_step {
            break;
        }
    }
    result.best = best.0;
    result.best_score = best.1;
    result.best_mods = best_mods;
    result.population = pop;
    result
}

fn top_k(mut pop: Vec<Individual>, k: usize) -> Vec<Individual> {
    pop.sort_by(|a, b| b.score.total_cmp(&a.score));
    pop.truncate(k);
    pop
}

fn fingerprints(pop: &[Individual]) -> Vec<String> {
    let mut v: Vec<String> = pop.iter().map(|i| i.mods.fingerprint()).collect();
    v.sort();
    v
}

/// Nodes whose flags differ between `a` and `b`.
pub fn diff(g: &ConflictGraph, a: &Modifications, b: &Modifications) -> Vec<Node> {
    g.nodes()
        .filter(|&n| a.merged(n) != b.merged(n) || a.cut(n) != b.cut(n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::tests::statics;
    use super::super::{build_full_graph, encode_ic3};
    use super::*;
    use crate::agent::DetectionMode;
    use crate::engine::OpType::{Read as R, Write as W};
    use crate::features::default_selector;
    use rand::SeedableRng;
    use std::sync::Arc;

    #[test]
    fn flags_only_grow() {
        let s = statics(&[&[(0, R), (0, W), (1, W)], &[(1, R), (0, W)]]);
        let g = build_full_graph(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut m = Modifications::all_false(&g);
        for _ in 0..50 {
            let c = flip(&g, &m, 0.2, &mut rng);
            assert!(m.is_subset_of(&c));
            let (pn, pe) = g.effective_size(&m);
            let (cn, ce) = g.effective_size(&c);
            assert!(cn <= pn && ce <= pe);
            m = c;
        }
    }

    #[test]
    fn zero_edge_graph_returns_initial_function() {
        let s = statics(&[&[(0, R), (1, R)]]);
        let g = build_full_graph(&s);
        let f = encode_ic3(Arc::new(default_selector(1, 2)), &s);
        let mut calls = 0;
        let r = graph_reduction_search(
            &g,
            f.clone(),
            1.0,
            &SearchConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(1),
            &mut |_| {
                calls += 1;
                0.0
            },
        );
        assert_eq!((r.rounds, r.evaluations, calls), (1, 0, 0));
        assert_eq!(r.best, f);
    }

    #[test]
    fn search_finds_the_cut_everything_optimum() {
        // score counts rows without detection, so cutting is always better
        let s = statics(&[&[(0, R), (0, W)], &[(0, W), (1, R)]]);
        let g = build_full_graph(&s);
        let f = encode_ic3(Arc::new(default_selector(2, 2)), &s);
        let score = |f: &AgentFunction| {
            f.rows().filter(|(_, a)| a.detection == DetectionMode::NoDetection).count() as f64
        };
        let init = score(&f);
        let cfg = SearchConfig {
            mutate_rate: 0.3,
            max_step: 10,
            ..Default::default()
        };
        let r = graph_reduction_search(&g, f, init, &cfg, &mut ChaCha8Rng::seed_from_u64(3), &mut |f| score(f));
        assert!(r.best_score > init);
        assert!(r.steps.iter().all(|s| s.child_is_superset));
        assert!(r.start.is_all_false());
        let mut last = f64::MIN;
        for s in &r.steps {
            assert!(s.best_score >= last);
            last = s.best_score;
        }
    }
}

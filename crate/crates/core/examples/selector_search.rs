//! Picks a feature selector by Bayesian optimization. Each candidate is
//! scored by a brief optimization run with that selector.

use std::sync::Arc;
use std::time::Duration;

use learned_cc::cli::preset;
use learned_cc::executor::{evaluate_score, Engine, RunConfig};
use learned_cc::features::{default_selector, Feature, FeatureSelector, FeatureSpec};
use learned_cc::graph::encode_ic3;
use learned_cc::optimizer::{describe_selector, optimize_feature_selector, run_pipeline, PipelineConfig, SelectorSearchConfig, SelectorSpace};

fn main() {
    let w = preset("ycsb1").unwrap().build();
    let statics = w.static_ops();
    let base = default_selector(statics.n_types() as u16, statics.max_ops());
    let mut without_age = base.features;
    without_age[Feature::RelativeAge.index()] = FeatureSpec::excluded();
    let candidates = vec![
        base.clone(),
        FeatureSelector::new(2, without_age).unwrap(),
    ];
    let eval = RunConfig::timed(2, Duration::from_millis(30), Duration::from_millis(120));
    let cfg = SelectorSearchConfig {
        max_evals: candidates.len(),
        ..Default::default()
    };
    let res = optimize_feature_selector(&SelectorSpace::Candidates(candidates), &cfg, &mut |sel| {
        let f = encode_ic3(Arc::new(sel.clone()), &statics);
        let engine = Arc::new(Engine::for_workload(w.as_ref(), f.clone()));
        run_pipeline(&statics, f, &PipelineConfig::with_budget(Duration::from_secs(3)), &mut |g| {
            evaluate_score(&engine, &w, g.clone(), &eval).throughput
        })
        .best_score
    });
    for (sel, score) in &res.ranking {
        println!("{:<40} {score:.0}", describe_selector(sel));
    }
}

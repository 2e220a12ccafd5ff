//! Builds the static conflict graph of TPC-C, derives the IC3 function
//! from it, and runs a short reduction search with a synthetic score that
//! rewards smaller graphs.

use learned_cc::graph::{build_full_graph, encode_ic3, graph_reduction_search, SearchConfig};
use learned_cc::workload::{Tpcc, TpccConfig, Workload};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let statics = Tpcc::new(TpccConfig::default()).static_ops();
    let g = build_full_graph(&statics);
    println!("TPC-C conflict graph: {} nodes, {} edges", g.node_count(), g.edge_count());
    let ic3 = encode_ic3(std::sync::Arc::new(learned_cc::features::default_selector(statics.n_types() as u16, statics.max_ops())), &statics);
    println!("IC3 table: {} rows", ic3.key_count());

    // fewer blocking waits score higher; a stand-in for measured throughput
    let mut score = |f: &learned_cc::agent::AgentFunction| -> f64 {
        -(f.rows().map(|(_, a)| a.waits.iter().map(|&w| w as f64).sum::<f64>()).sum::<f64>())
    };
    let s0 = score(&ic3);
    let cfg = SearchConfig {
        max_evals: Some(300),
        ..SearchConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let res = graph_reduction_search(&g, ic3, s0, &cfg, &mut rng, &mut score);
    for st in res.steps.iter().filter(|s| s.score >= s.best_score).take(10) {
        println!("round {:>2}: {:?} -> {:?} score {:.0}", st.round, st.parent_size, st.child_size, st.score);
    }
    println!("reduced to {:?} after {} evaluations", g.effective_size(&res.best_mods), res.evaluations);
}

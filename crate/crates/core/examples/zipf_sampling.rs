//! Empirical vs exact Zipf probabilities, then a few generated YCSB and
//! TPC-C requests.

use learned_cc::workload::{Tpcc, TpccConfig, Workload, Ycsb, YcsbConfig, Zipf};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for theta in [0.0, 0.99] {
        let z = Zipf::new(10, theta);
        let mut counts = [0u32; 10];
        for _ in 0..200_000 {
            counts[z.sample(&mut rng) as usize] += 1;
        }
        println!("theta {theta}");
        for (k, c) in counts.iter().enumerate() {
            println!("  rank {k}: empirical {:.4} exact {:.4}", *c as f64 / 200_000.0, z.pmf(k as u64));
        }
    }
    let ycsb = Ycsb::new(YcsbConfig::pattern(2));
    let tpcc = Tpcc::new(TpccConfig::default());
    for w in [&ycsb as &dyn Workload, &tpcc] {
        let r = w.generate(&mut rng);
        let ops: Vec<String> = r.ops.iter().take(6).map(|o| format!("{:?} {:?}", o.op_type, o.key)).collect();
        println!("{} type {} with {} ops: {} ...", w.name(), r.txn_type, r.ops.len(), ops.join(", "));
    }
}

//! Gaussian-process UCB maximization of a two-peaked function on the unit
//! square.

use learned_cc::optimizer::{bo_maximize, BoConfig, StopRule, UCB_LAMBDA};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let peak = |x: &[f64], c: [f64; 2], h: f64| h * (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / 0.02).exp();
    let mut f = |x: &[f64]| peak(x, [0.2, 0.7], 1.0) + peak(x, [0.8, 0.3], 1.5);
    let cfg = BoConfig {
        lambda: UCB_LAMBDA,
        stop: StopRule::Budget,
        deadline: None,
        max_evals: Some(40),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let out = bo_maximize(2, Vec::new(), &cfg, &mut rng, &mut f);
    let x = out.best_x.unwrap();
    println!("best {:.4} at ({:.3}, {:.3}) after {} evaluations; true max 1.5 at (0.8, 0.3)", out.best_y, x[0], x[1], out.evaluations);
}

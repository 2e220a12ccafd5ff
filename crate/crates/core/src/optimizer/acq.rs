use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::gp::Gp;
use super::lbfgs::{minimize_box, LbfgsConfig};

/// Exploration weight of the upper confidence bound.
pub const UCB_LAMBDA: f64 = 2.576;

pub const RANDOM_CANDIDATES: usize = 1000;
pub const LOCAL_STARTS: usize = 16;

pub fn ucb(gp: &Gp, p: &[f64], lambda: f64) -> f64 {
    let (m, s) = gp.predict(p);
    m + lambda * s
}

#[derive(Clone, Debug)]
pub struct Proposal {
    pub x: Vec<f64>,
    pub ucb: f64,
    /// Best UCB among the screened random candidates, before refinement.
    pub screened_ucb: f64,
}

/// Maximizes `μ + λσ` over `[0,1]^dim`: scores uniform random candidates,
/// then refines the best few with bounded quasi-Newton steps. An empty
/// surrogate yields a uniform draw.
pub fn propose_next(gp: &Gp, dim: usize, lambda: f64, rng: &mut ChaCha8Rng) -> Proposal {
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| rng.gen()).collect() };
    if gp.is_empty() {
        let x = draw(rng);
        let ucb = ucb(gp, &x, lambda);
        return Proposal {
            x,
            ucb,
            screened_ucb: ucb,
        };
    }
    let mut cands: Vec<Vec<f64>> = (0..RANDOM_CANDIDATES).map(|_| draw(rng)).collect();
    cands.extend(gp.inputs().iter().cloned());
    let preds = gp.predict_batch(&cands);
    let mut scored: Vec<(f64, usize)> = preds
        .iter()
        .enumerate()
        .map(|(i, (m, s))| (m + lambda * s, i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = Proposal {
        x: cands[scored[0].1].clone(),
        ucb: scored[0].0,
        screened_ucb: scored[0].0,
    };
    let lo = vec![0.0; dim];
    let hi = vec![1.0; dim];
    for &(_, i) in scored.iter().take(LOCAL_STARTS) {
        let (x, v) = minimize_box(
            |p| {
                let (m, s, dm, ds) = gp.predict_with_grad(p);
                let g = dm.iter().zip(&ds).map(|(a, b)| -(a + lambda * b)).collect();
                (-(m + lambda * s), g)
            },
            &cands[i],
            &lo,
            &hi,
            LbfgsConfig {
                max_iter: 30,
                ..Default::default()
            },
        );
        if -v > best.ucb {
            best = Proposal { x, ucb: -v, ..best };
        }
    }
    best
}

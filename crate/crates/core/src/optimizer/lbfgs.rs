//! Projected limited-memory BFGS for box-constrained minimization.

use std::collections::VecDeque;

#[derive(Clone, Copy, Debug)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop once the projected gradient's max-norm falls below this.
    pub tol: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            memory: 8,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Variables pinned at a bound with the gradient pushing outward.
fn pinned(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> Vec<bool> {
    (0..x.len())
        .map(|i| (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0))
        .collect()
}

/// Minimizes `f` (returning value and gradient) over `[lo, hi]` from `x0`.
/// Returns the final point and its value.
pub fn minimize_box(
    mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    cfg: LbfgsConfig,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() {
        return (x, fx);
    }
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    for _ in 0..cfg.max_iter {
        let pin = pinned(&x, &g, lo, hi);
        let pg_norm = (0..n)
            .filter(|&i| !pin[i])
            .map(|i| g[i].abs())
            .fold(0.0, f64::max);
        if pg_norm < cfg.tol {
            break;
        }
        // two-loop recursion on the free subspace
        let mut q: Vec<f64> = (0..n).map(|i| if pin[i] { 0.0 } else { g[i] }).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            for i in 0..n {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            if gamma.is_finite() && gamma > 0.0 {
                q.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for i in 0..n {
                q[i] += s[i] * (a - b);
            }
        }
        let mut d: Vec<f64> = (0..n).map(|i| if pin[i] { 0.0 } else { -q[i] }).collect();
        if dot(&d, &g) >= 0.0 {
            // not a descent direction: fall back to steepest descent
            hist.clear();
            d = (0..n).map(|i| if pin[i] { 0.0 } else { -g[i] }).collect();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<f64> = (0..n).map(|i| x[i] + step * d[i]).collect();
            project(&mut xn, lo, hi);
            let (fn_, gn) = f(&xn);
            let moved: f64 = (0..n).map(|i| g[i] * (xn[i] - x[i])).sum();
            if fn_.is_finite() && fn_ <= fx + 1e-4 * moved {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else { break };
        let s: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| gn[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            hist.push_back((s, y, 1.0 / sy));
            if hist.len() > cfg.memory {
                hist.pop_front();
            }
        } else {
            // negative curvature along the step: the stored pairs mislead
            hist.clear();
        }
        let improvement = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        if improvement.abs() <= 1e-14 * fx.abs().max(1.0) {
            break;
        }
    }
    (x, fx)
}

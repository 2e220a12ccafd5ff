//! Gaussian-process regression with an isotropic RBF kernel.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::lbfgs::{minimize_box, LbfgsConfig};

/// Kernel hyperparameters: length-scale `ℓ`, signal std `σ_f`, noise std
/// `σ_n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyper {
    pub length: f64,
    pub signal: f64,
    pub noise: f64,
}

impl Hyper {
    pub fn to_log(self) -> [f64; 3] {
        [self.length.ln(), self.signal.ln(), self.noise.ln()]
    }

    pub fn from_log(l: [f64; 3]) -> Self {
        Hyper {
            length: l[0].exp(),
            signal: l[1].exp(),
            noise: l[2].exp(),
        }
    }
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            length: 0.5,
            signal: 1.0,
            noise: 0.1,
        }
    }
}

const JITTER: f64 = 1e-10;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kernel(h: &Hyper, d2: f64) -> f64 {
    h.signal * h.signal * (-0.5 * d2 / (h.length * h.length)).exp()
}

/// Noisy kernel matrix factorized with escalating jitter.
fn factor(x: &[Vec<f64>], h: &Hyper) -> Option<(Cholesky<f64, Dyn>, DMatrix<f64>)> {
    let n = x.len();
    let d2 = DMatrix::from_fn(n, n, |i, j| sq_dist(&x[i], &x[j]));
    let base = d2.map(|v| kernel(h, v));
    let mut jitter = JITTER;
    while jitter < 1e-3 {
        let mut k = base.clone();
        for i in 0..n {
            k[(i, i)] += h.noise * h.noise + jitter;
        }
        if let Some(c) = Cholesky::new(k) {
            return Some((c, d2));
        }
        jitter *= 10.0;
    }
    None
}

/// Log marginal likelihood of zero-mean targets `y` and its gradient with
/// respect to `(ln ℓ, ln σ_f, ln σ_n)`.
pub fn log_marginal_likelihood(x: &[Vec<f64>], y: &[f64], log_hyper: [f64; 3]) -> (f64, [f64; 3]) {
    let h = Hyper::from_log(log_hyper);
    let n = x.len();
    let Some((chol, d2)) = factor(x, &h) else {
        return (f64::NEG_INFINITY, [0.0; 3]);
    };
    let yv = DVector::from_column_slice(y);
    let alpha = chol.solve(&yv);
    let logdet: f64 = chol.l_dirty().diagonal().iter().take(n).map(|v| v.ln()).sum();
    let lml = -0.5 * yv.dot(&alpha) - logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    // dL/dθ = ½ tr((ααᵀ − K⁻¹) ∂K/∂θ)
    let kinv = chol.inverse();
    let mut g = [0.0; 3];
    let l2 = h.length * h.length;
    for i in 0..n {
        for j in 0..n {
            let w = alpha[i] * alpha[j] - kinv[(i, j)];
            let kf = kernel(&h, d2[(i, j)]);
            g[0] += w * kf * d2[(i, j)] / l2;
            g[1] += w * 2.0 * kf;
        }
        g[2] += (alpha[i] * alpha[i] - kinv[(i, i)]) * 2.0 * h.noise * h.noise;
    }
    (lml, [0.5 * g[0], 0.5 * g[1], 0.5 * g[2]])
}

/// Posterior over normalized targets; predictions are mapped back to the
/// original scale.
#[derive(Clone, Debug)]
pub struct Gp {
    x: Vec<Vec<f64>>,
    dim: usize,
    y_mean: f64,
    y_std: f64,
    hyper: Hyper,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
}

fn normalize(y: &[f64]) -> (f64, f64, Vec<f64>) {
    if y.is_empty() {
        return (0.0, 1.0, Vec::new());
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    (mean, std, y.iter().map(|v| (v - mean) / std).collect())
}

impl Gp {
    /// No data: mean 0, standard deviation `σ_f`.
    pub fn prior(dim: usize) -> Self {
        Gp {
            x: Vec::new(),
            dim,
            y_mean: 0.0,
            y_std: 1.0,
            hyper: Hyper {
                signal: 1.0,
                ..Hyper::default()
            },
            chol: None,
            alpha: DVector::zeros(0),
        }
    }

    /// Conditions on `(x, y)` with fixed hyperparameters.
    pub fn with_hyper(x: Vec<Vec<f64>>, y: &[f64], hyper: Hyper) -> Self {
        assert_eq!(x.len(), y.len());
        let dim = x.first().map_or(0, Vec::len);
        let (y_mean, y_std, yn) = normalize(y);
        let (chol, alpha) = match factor(&x, &hyper) {
            Some((c, _)) if !x.is_empty() => {
                let a = c.solve(&DVector::from_vec(yn));
                (Some(c), a)
            }
            _ => (None, DVector::zeros(0)),
        };
        Gp {
            dim,
            x,
            y_mean,
            y_std,
            hyper,
            chol,
            alpha,
        }
    }

    /// Conditions on `(x, y)`, choosing hyperparameters by maximizing the
    /// log marginal likelihood from several starting points. Fewer than two
    /// points use the default hyperparameters.
    pub fn fit(x: Vec<Vec<f64>>, y: &[f64]) -> Self {
        if x.len() < 2 {
            let dim = x.first().map_or(0, Vec::len);
            return if x.is_empty() {
                Gp::prior(dim)
            } else {
                Gp::with_hyper(x, y, Hyper::default())
            };
        }
        let dim = x[0].len().max(1) as f64;
        let (_, _, yn) = normalize(y);
        let scale = dim.sqrt();
        let lo = [(0.01f64).ln(), (0.05f64).ln(), (1e-4f64).ln()];
        let hi = [(10.0 * scale).ln(), (10.0f64).ln(), (2.0f64).ln()];
        let mut best = (Hyper::default().to_log(), f64::NEG_INFINITY);
        for l in [0.1, 0.4, 1.5] {
            for noise in [1e-3f64, 0.2] {
                let start = [(l * scale).ln(), 0.0, noise.ln()];
                let (p, v) = minimize_box(
                    |p| {
                        let (v, g) = log_marginal_likelihood(&x, &yn, [p[0], p[1], p[2]]);
                        (-v, vec![-g[0], -g[1], -g[2]])
                    },
                    &start,
                    &lo,
                    &hi,
                    LbfgsConfig {
                        max_iter: 50,
                        ..Default::default()
                    },
                );
                if -v > best.1 {
                    best = ([p[0], p[1], p[2]], -v);
                }
            }
        }
        Gp::with_hyper(x, y, Hyper::from_log(best.0))
    }

    pub fn hyper(&self) -> Hyper {
        self.hyper
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.x
    }

    fn kstar(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| kernel(&self.hyper, sq_dist(p, xi))))
    }

    /// Posterior mean and standard deviation of the noise-free score.
    pub fn predict(&self, p: &[f64]) -> (f64, f64) {
        let sf2 = self.hyper.signal * self.hyper.signal;
        let Some(chol) = &self.chol else {
            return (self.y_mean, self.y_std * self.hyper.signal);
        };
        let k = self.kstar(p);
        let mean = k.dot(&self.alpha);
        let v = chol.l_dirty().view((0, 0), (k.len(), k.len())).solve_lower_triangular(&k);
        let var = v.map_or(sf2, |v| sf2 - v.dot(&v)).max(0.0);
        (self.y_mean + self.y_std * mean, self.y_std * var.sqrt())
    }

    pub fn predict_batch(&self, ps: &[Vec<f64>]) -> Vec<(f64, f64)> {
        let Some(chol) = &self.chol else {
            return ps.iter().map(|p| self.predict(p)).collect();
        };
        let n = self.x.len();
        let sf2 = self.hyper.signal * self.hyper.signal;
        let ks = DMatrix::from_fn(n, ps.len(), |i, j| kernel(&self.hyper, sq_dist(&ps[j], &self.x[i])));
        let means = ks.transpose() * &self.alpha;
        let v = chol
            .l_dirty()
            .view((0, 0), (n, n))
            .solve_lower_triangular(&ks)
            .expect("factor is nonsingular");
        (0..ps.len())
            .map(|j| {
                let var = (sf2 - v.column(j).norm_squared()).max(0.0);
                (self.y_mean + self.y_std * means[j], self.y_std * var.sqrt())
            })
            .collect()
    }

    /// Mean and standard deviation with their gradients in `p`.
    pub fn predict_with_grad(&self, p: &[f64]) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let d = p.len();
        let Some(chol) = &self.chol else {
            let (m, s) = self.predict(p);
            return (m, s, vec![0.0; d], vec![0.0; d]);
        };
        let sf2 = self.hyper.signal * self.hyper.signal;
        let l2 = self.hyper.length * self.hyper.length;
        let k = self.kstar(p);
        let w = chol.solve(&k);
        let mean = k.dot(&self.alpha);
        let var = (sf2 - k.dot(&w)).max(0.0);
        let sd = var.sqrt();
        let mut dmu = vec![0.0; d];
        let mut dvar = vec![0.0; d];
        for (i, xi) in self.x.iter().enumerate() {
            for t in 0..d {
                let dk = -k[i] * (p[t] - xi[t]) / l2;
                dmu[t] += self.alpha[i] * dk;
                dvar[t] -= 2.0 * w[i] * dk;
            }
        }
        let dsd: Vec<f64> = dvar
            .iter()
            .map(|v| if sd > 1e-9 { self.y_std * v / (2.0 * sd) } else { 0.0 })
            .collect();
        (
            self.y_mean + self.y_std * mean,
            self.y_std * sd,
            dmu.into_iter().map(|v| v * self.y_std).collect(),
            dsd,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect()
    }

    #[test]
    fn single_point_is_reproduced() {
        let gp = Gp::fit(vec![vec![0.2, 0.7]], &[3.5]);
        let (m, _) = gp.predict(&[0.2, 0.7]);
        assert!((m - 3.5).abs() < 1e-9);
        assert!(gp.predict(&[0.9, 0.1]).1 > 0.0);
    }

    #[test]
    fn far_points_revert_to_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = points(&mut rng, 8, 2);
        let y: Vec<f64> = x.iter().map(|p| p[0] * 3.0 - p[1]).collect();
        let h = Hyper {
            length: 0.1,
            signal: 1.3,
            noise: 1e-3,
        };
        let gp = Gp::with_hyper(x, &y, h);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let (m, s) = gp.predict(&[5.0, 5.0]);
        let std = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
        assert!((m - mean).abs() < 1e-9);
        assert!((s - std * 1.3).abs() < 1e-9);
    }

    #[test]
    fn batch_matches_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = points(&mut rng, 12, 3);
        let y: Vec<f64> = x.iter().map(|p| p.iter().sum::<f64>().sin()).collect();
        let gp = Gp::fit(x, &y);
        let q = points(&mut rng, 20, 3);
        for (p, (bm, bs)) in q.iter().zip(gp.predict_batch(&q)) {
            let (m, s) = gp.predict(p);
            assert!((m - bm).abs() < 1e-9 && (s - bs).abs() < 1e-9);
        }
    }

    #[test]
    fn prediction_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = points(&mut rng, 10, 2);
        let y: Vec<f64> = x.iter().map(|p| (3.0 * p[0]).cos() + p[1]).collect();
        let gp = Gp::with_hyper(x, &y, Hyper { length: 0.3, signal: 1.0, noise: 0.05 });
        let p = [0.37, 0.61];
        let (_, _, dm, ds) = gp.predict_with_grad(&p);
        let h = 1e-6;
        for t in 0..2 {
            let mut a = p;
            let mut b = p;
            a[t] += h;
            b[t] -= h;
            let (ma, sa) = gp.predict(&a);
            let (mb, sb) = gp.predict(&b);
            assert!(((ma - mb) / (2.0 * h) - dm[t]).abs() < 1e-5);
            assert!(((sa - sb) / (2.0 * h) - ds[t]).abs() < 1e-5);
        }
    }

    #[test]
    fn adding_a_point_never_raises_its_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = points(&mut rng, 6, 2);
        let mut y: Vec<f64> = x.iter().map(|p| p[0] - p[1]).collect();
        let h = Hyper::default();
        let p = vec![0.5, 0.5];
        let before = Gp::with_hyper(x.clone(), &y, h).predict(&p).1;
        x.push(p.clone());
        y.push(0.0);
        // normalization changes with the data; compare in normalized units
        let gp = Gp::with_hyper(x, &y, h);
        let after = gp.predict(&p).1 / gp.y_std;
        let before_norm = before / normalize(&y[..6]).1;
        assert!(after <= before_norm + 1e-12);
    }
}

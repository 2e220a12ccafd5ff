use rand::Rng;

/// Zipfian sampler over ranks `0..n` with `P(k) ∝ 1/(k+1)^θ`.
///
/// Uses an explicit CDF table and binary search; exact for any θ ≥ 0.
#[derive(Clone, Debug)]
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(n: u64, theta: f64) -> Self {
        assert!(n > 0, "zipf over an empty domain");
        let mut cdf = Vec::with_capacity(n as usize);
        let mut acc = 0.0;
        for k in 1..=n {
            acc += (k as f64).powf(-theta);
            cdf.push(acc);
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        *cdf.last_mut().unwrap() = 1.0;
        Zipf { cdf }
    }

    pub fn n(&self) -> u64 {
        self.cdf.len() as u64
    }

    /// Closed-form probability of rank `k` (0-based).
    pub fn pmf(&self, k: u64) -> f64 {
        let k = k as usize;
        if k == 0 {
            self.cdf[0]
        } else {
            self.cdf[k] - self.cdf[k - 1]
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1) as u64
    }
}

/// One draw from a fresh sampler; prefer [`Zipf`] in loops.
pub fn zipf_sample<R: Rng + ?Sized>(n: u64, theta: f64, rng: &mut R) -> u64 {
    Zipf::new(n, theta).sample(rng)
}

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::zipf::Zipf;
use super::{OpSpec, StaticOp, StaticWorkload, TxnRequest, TxnTypeInfo, Workload};
use crate::engine::{Key, OpType, TableId};

/// Hotspot patterns 1 through 4, hotspots moving toward the end of the
/// transaction.
pub const PATTERNS: [[bool; 10]; 4] = {
    const O: bool = false;
    const I: bool = true;
    [
        [O, O, O, I, O, O, O, O, O, O],
        [I, O, O, I, I, O, O, O, O, O],
        [O, O, O, I, O, I, O, I, I, O],
        [I, I, O, O, I, O, O, I, I, O],
    ]
};

#[derive(Clone, Debug, PartialEq)]
pub struct YcsbConfig {
    /// Hotspot flag per position.
    pub pattern: Vec<bool>,
    /// Fixed access type per position.
    pub read_write: Vec<OpType>,
    pub n_keys: u64,
    pub theta_hot: f64,
    pub theta_cold: f64,
}

fn alternating(len: usize) -> Vec<OpType> {
    (0..len)
        .map(|i| if i % 2 == 0 { OpType::Read } else { OpType::Write })
        .collect()
}

impl YcsbConfig {
    /// Ten operations, alternating read/write, with hotspot pattern `p` (1..=4).
    pub fn pattern(p: usize) -> Self {
        YcsbConfig {
            pattern: PATTERNS[p - 1].to_vec(),
            read_write: alternating(10),
            n_keys: 10_000,
            theta_hot: 1.0,
            theta_cold: 0.0,
        }
    }

    /// No hotspots, `len` operations, a `read_ratio` share of them reads
    /// spread evenly over the positions.
    pub fn generalized(len: usize, read_ratio: f64, n_keys: u64) -> Self {
        let r = read_ratio.clamp(0.0, 1.0);
        let read_write = (0..len)
            .map(|i| {
                if ((i + 1) as f64 * r).floor() > (i as f64 * r).floor() {
                    OpType::Read
                } else {
                    OpType::Write
                }
            })
            .collect();
        YcsbConfig {
            pattern: vec![false; len],
            read_write,
            n_keys,
            theta_hot: 1.0,
            theta_cold: 0.0,
        }
    }

    pub fn with_keys(mut self, n_keys: u64) -> Self {
        self.n_keys = n_keys;
        self
    }

    pub fn ops_per_txn(&self) -> usize {
        self.pattern.len()
    }
}

pub struct Ycsb {
    cfg: YcsbConfig,
    hot: Zipf,
    cold: Zipf,
}

impl Ycsb {
    pub fn new(cfg: YcsbConfig) -> Self {
        assert_eq!(cfg.pattern.len(), cfg.read_write.len(), "pattern/read-write length mismatch");
        Ycsb {
            hot: Zipf::new(cfg.n_keys, cfg.theta_hot),
            cold: Zipf::new(cfg.n_keys, cfg.theta_cold),
            cfg,
        }
    }

    pub fn config(&self) -> &YcsbConfig {
        &self.cfg
    }

    fn draw(&self, hot: bool, rng: &mut ChaCha8Rng) -> u64 {
        let (z, theta) = if hot {
            (&self.hot, self.cfg.theta_hot)
        } else {
            (&self.cold, self.cfg.theta_cold)
        };
        if theta == 0.0 {
            rng.gen_range(0..self.cfg.n_keys)
        } else {
            z.sample(rng)
        }
    }
}

impl Workload for Ycsb {
    fn name(&self) -> String {
        "ycsb".into()
    }

    fn schema(&self) -> Vec<(String, u64)> {
        vec![("usertable".into(), self.cfg.n_keys)]
    }

    fn static_ops(&self) -> StaticWorkload {
        StaticWorkload {
            types: vec![TxnTypeInfo {
                name: "ycsb".into(),
                ops: self
                    .cfg
                    .read_write
                    .iter()
                    .map(|&op_type| StaticOp {
                        table: TableId(0),
                        op_type,
                    })
                    .collect(),
                learned: true,
            }],
        }
    }

    fn generate(&self, rng: &mut ChaCha8Rng) -> TxnRequest {
        let ops = self
            .cfg
            .pattern
            .iter()
            .zip(&self.cfg.read_write)
            .map(|(&hot, &op_type)| OpSpec {
                key: Key::new(0, self.draw(hot, rng)),
                op_type,
            })
            .collect();
        TxnRequest {
            txn_type: 0,
            ops,
            seed: rng.gen(),
        }
    }
}

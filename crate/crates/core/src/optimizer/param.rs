//! Encoding of an agent function's tunable fields as a point in `[0,1]^d`.

use crate::agent::{Action, AgentFunction, DetectionMode, INFINITE_TIMEOUT};
use crate::features::{keys_for_op, StateKey};
use crate::workload::StaticWorkload;

/// Largest finite timeout, in microseconds; the top of the scale blocks.
pub const T_MAX_US: f64 = 10_000.0;
/// Largest retry backoff, in microseconds.
pub const BACKOFF_MAX_US: f64 = 10_000.0;

const BLOCKING_FROM: f64 = 1.0 - 1e-9;

pub fn encode_timeout(t: f64) -> f64 {
    if t >= T_MAX_US {
        1.0
    } else {
        (t.max(0.0).ln_1p() / T_MAX_US.ln_1p()).clamp(0.0, 1.0)
    }
}

pub fn decode_timeout(u: f64) -> f64 {
    if u >= BLOCKING_FROM {
        INFINITE_TIMEOUT
    } else {
        (u.clamp(0.0, 1.0) * T_MAX_US.ln_1p()).exp_m1()
    }
}

pub fn encode_backoff(b: f64) -> f64 {
    (b.max(0.0).ln_1p() / BACKOFF_MAX_US.ln_1p()).clamp(0.0, 1.0)
}

pub fn decode_backoff(u: f64) -> f64 {
    (u.clamp(0.0, 1.0) * BACKOFF_MAX_US.ln_1p()).exp_m1()
}

/// Which fields a stage tunes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    /// Per-row timeouts and per-type backoffs.
    Timeouts,
    /// Additionally detection mode (one-hot, argmax on decode), priority
    /// and pipeline waits scaled by the dependency type's length.
    All,
}

/// The rows and types a stage tunes: rows reachable from learned types.
#[derive(Clone, Debug)]
pub struct ParamSpace {
    pub kind: ParamKind,
    pub rows: Vec<StateKey>,
    pub types: Vec<u16>,
    op_counts: Vec<u32>,
}

impl ParamSpace {
    pub fn new(kind: ParamKind, f: &AgentFunction, statics: &StaticWorkload) -> Self {
        let mut types = statics.learned_types();
        if types.is_empty() {
            types = (0..statics.n_types() as u16).collect();
        }
        let mut rows: Vec<StateKey> = types
            .iter()
            .flat_map(|&t| {
                statics.types[t as usize]
                    .ops
                    .iter()
                    .enumerate()
                    .flat_map(move |(i, op)| keys_for_op(f.selector(), t, i as u32 + 1, op.op_type))
            })
            .collect();
        rows.sort();
        rows.dedup();
        ParamSpace {
            kind,
            rows,
            types,
            op_counts: statics.op_counts(),
        }
    }

    fn per_row(&self) -> usize {
        match self.kind {
            ParamKind::Timeouts => 1,
            ParamKind::All => 5 + self.op_counts.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len() * self.per_row() + self.types.len()
    }

    pub fn encode(&self, f: &AgentFunction) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        for &k in &self.rows {
            let a = f.get_cc(k);
            x.push(encode_timeout(a.timeout_us));
            if self.kind == ParamKind::All {
                for m in DetectionMode::ALL {
                    x.push(if a.detection == m { 1.0 } else { 0.0 });
                }
                x.push(a.priority.clamp(0.0, 1.0) as f64);
                for (i, &n) in self.op_counts.iter().enumerate() {
                    let w = a.waits.get(i).copied().unwrap_or(0);
                    x.push(if n == 0 { 0.0 } else { (w as f64 / n as f64).min(1.0) });
                }
            }
        }
        for &t in &self.types {
            x.push(encode_backoff(f.backoff_us(t)));
        }
        x
    }

    /// `base` with the tuned fields replaced by `x`.
    pub fn decode(&self, x: &[f64], base: &AgentFunction) -> AgentFunction {
        assert_eq!(x.len(), self.dim(), "parameter vector length");
        let mut f = base.clone();
        let per = self.per_row();
        for (r, &k) in self.rows.iter().enumerate() {
            let v = &x[r * per..(r + 1) * per];
            let mut a: Action = f.get_cc(k).clone();
            a.timeout_us = decode_timeout(v[0]);
            if self.kind == ParamKind::All {
                let mut best = 0;
                for m in 1..3 {
                    if v[1 + m] > v[1 + best] {
                        best = m;
                    }
                }
                a.detection = DetectionMode::ALL[best];
                a.priority = v[4].clamp(0.0, 1.0) as f32;
                a.waits = self
                    .op_counts
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| (v[5 + i].clamp(0.0, 1.0) * n as f64).round() as u32)
                    .collect();
            }
            f.set_row(k, a);
        }
        let off = self.rows.len() * per;
        for (j, &t) in self.types.iter().enumerate() {
            f.set_backoff(t as usize, decode_backoff(x[off + j]));
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::encode_ic3;
    use crate::features::default_selector;
    use crate::workload::{Tpcc, TpccConfig, Workload};
    use std::sync::Arc;

    #[test]
    fn timeout_scale_end_points() {
        assert_eq!(encode_timeout(0.0), 0.0);
        assert_eq!(encode_timeout(INFINITE_TIMEOUT), 1.0);
        assert_eq!(decode_timeout(1.0), INFINITE_TIMEOUT);
        assert_eq!(decode_timeout(0.0), 0.0);
        for t in [1.0, 37.0, 900.0, 9_999.0] {
            assert!((decode_timeout(encode_timeout(t)) - t).abs() < 1e-6 * t);
        }
    }

    #[test]
    fn tpcc_space_covers_only_learned_types() {
        let w = Tpcc::new(TpccConfig::default());
        let s = w.static_ops();
        let f = encode_ic3(Arc::new(default_selector(5, s.max_ops())), &s);
        let sp = ParamSpace::new(ParamKind::Timeouts, &f, &s);
        assert_eq!(sp.types, vec![0, 1, 2]);
        // op index and relative age per learned slot
        assert_eq!(sp.rows.len(), (46 + 6 + 40) * 3);
        assert_eq!(sp.dim(), sp.rows.len() + 3);
    }
}

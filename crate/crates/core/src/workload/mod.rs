//! Benchmark workloads: YCSB with hotspot patterns and a desk-scale TPC-C.

mod config;
mod tpcc;
mod ycsb;
mod zipf;

pub use config::{parse_config, ConfigError, WorkloadConfig, WorkloadKind};
pub use tpcc::{Tpcc, TpccConfig, TpccTable, TpccType};
pub use ycsb::{Ycsb, YcsbConfig, PATTERNS};
pub use zipf::{zipf_sample, Zipf};

use rand_chacha::ChaCha8Rng;

use crate::engine::{Key, OpType, Payload, Store, TableId};

/// Table and access type of one operation slot of a transaction type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StaticOp {
    pub table: TableId,
    pub op_type: OpType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TxnTypeInfo {
    pub name: String,
    /// Longest operation list the type can issue.
    pub ops: Vec<StaticOp>,
    /// Whether the optimizer tunes this type's rows.
    pub learned: bool,
}

/// Per-type operation lists known before execution.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticWorkload {
    pub types: Vec<TxnTypeInfo>,
}

impl StaticWorkload {
    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    pub fn op_counts(&self) -> Vec<u32> {
        self.types.iter().map(|t| t.ops.len() as u32).collect()
    }

    pub fn max_ops(&self) -> u32 {
        self.types.iter().map(|t| t.ops.len() as u32).max().unwrap_or(0)
    }

    pub fn learned_types(&self) -> Vec<u16> {
        (0..self.types.len() as u16)
            .filter(|&t| self.types[t as usize].learned)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpSpec {
    pub key: Key,
    pub op_type: OpType,
}

/// One generated transaction: its type, its access list and the seed that
/// determines the payloads it writes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TxnRequest {
    pub txn_type: u16,
    pub ops: Vec<OpSpec>,
    pub seed: u64,
}

pub trait Workload: Send + Sync {
    fn name(&self) -> String;
    /// `(table name, row count)` for every table.
    fn schema(&self) -> Vec<(String, u64)>;
    fn static_ops(&self) -> StaticWorkload;
    fn generate(&self, rng: &mut ChaCha8Rng) -> TxnRequest;
}

/// SplitMix64 finalizer over the pair.
pub fn mix64(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn initial_payload(key: Key) -> Payload {
    Payload::from_u64(mix64(key.table.0 as u64, key.row))
}

/// Value written by operation `op_index` of a transaction with `seed`,
/// given the running digest of everything it has read so far.
pub fn write_payload(seed: u64, op_index: u32, read_digest: u64) -> Payload {
    Payload::from_u64(mix64(mix64(seed, op_index as u64), read_digest))
}

/// Folds one read payload into the running digest.
pub fn fold_read(digest: u64, payload: &Payload) -> u64 {
    mix64(digest, payload.as_u64())
}

/// Loads every table of `w` with deterministic initial payloads.
pub fn load_store(w: &dyn Workload) -> Store {
    let schema = w.schema();
    let refs: Vec<(&str, u64)> = schema.iter().map(|(n, r)| (n.as_str(), *r)).collect();
    Store::new(&refs, initial_payload)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_depends_on_reads() {
        let a = write_payload(7, 2, 0);
        let b = write_payload(7, 2, fold_read(0, &Payload::from_u64(1)));
        assert_ne!(a, b);
        assert_eq!(a, write_payload(7, 2, 0));
    }
}

use crate::engine::{OpType, Transaction, TupleStats};

pub const FEATURE_COUNT: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    TxnType,
    OpIndex,
    OpType,
    KeyHotness,
    DepCount,
    DependentsCount,
    AccessorCount,
    WritesetSize,
    RelativeAge,
}

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::TxnType,
        Feature::OpIndex,
        Feature::OpType,
        Feature::KeyHotness,
        Feature::DepCount,
        Feature::DependentsCount,
        Feature::AccessorCount,
        Feature::WritesetSize,
        Feature::RelativeAge,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::TxnType => "txn_type",
            Feature::OpIndex => "op_index",
            Feature::OpType => "op_type",
            Feature::KeyHotness => "key_hotness",
            Feature::DepCount => "dep_count",
            Feature::DependentsCount => "dependents_count",
            Feature::AccessorCount => "accessor_count",
            Feature::WritesetSize => "writeset_size",
            Feature::RelativeAge => "relative_age",
        }
    }

    /// Categorical features bucket by category index, ignoring transform and range.
    pub fn is_categorical(self) -> bool {
        matches!(
            self,
            Feature::TxnType | Feature::OpType | Feature::RelativeAge
        )
    }

    /// Features fixed by the transaction type and operation position, known
    /// before execution.
    pub fn is_static(self) -> bool {
        matches!(self, Feature::TxnType | Feature::OpIndex | Feature::OpType)
    }
}

/// Age of the requester relative to the oldest running transaction holding
/// or awaiting a conflicting access on the same key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelativeAge {
    Younger = 0,
    Older = 1,
    NoConflict = 2,
}

impl RelativeAge {
    /// `oldest == u64::MAX` means no conflicting transaction is present.
    pub fn of(my_ts: u64, oldest: u64) -> Self {
        if oldest == u64::MAX {
            RelativeAge::NoConflict
        } else if oldest < my_ts {
            RelativeAge::Younger
        } else {
            RelativeAge::Older
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawFeatureVector {
    pub txn_type: u16,
    /// Executed operations plus one.
    pub op_index: u32,
    pub op_type: OpType,
    pub key_hotness: u32,
    pub dep_count: u32,
    pub dependents_count: u32,
    pub accessor_count: u32,
    pub writeset_size: u32,
    pub relative_age: RelativeAge,
}

impl RawFeatureVector {
    pub fn get(&self, f: Feature) -> f64 {
        match f {
            Feature::TxnType => self.txn_type as f64,
            Feature::OpIndex => self.op_index as f64,
            Feature::OpType => u8::from(self.op_type.is_write()) as f64,
            Feature::KeyHotness => self.key_hotness as f64,
            Feature::DepCount => self.dep_count as f64,
            Feature::DependentsCount => self.dependents_count as f64,
            Feature::AccessorCount => self.accessor_count as f64,
            Feature::WritesetSize => self.writeset_size as f64,
            Feature::RelativeAge => self.relative_age as u8 as f64,
        }
    }
}

/// Captures the nine features for the next operation of `txn`.
///
/// Touches only the transaction's own state and the tuple's relaxed
/// counters; no latch or mutex is taken.
pub fn collect(txn: &Transaction, op_type: OpType, stats: &TupleStats, epoch: u32) -> RawFeatureVector {
    RawFeatureVector {
        txn_type: txn.shared.txn_type,
        op_index: txn.executed + 1,
        op_type,
        key_hotness: stats.hotness(epoch),
        dep_count: txn.dep.len() as u32,
        dependents_count: txn.shared.dependents(),
        accessor_count: stats.accessors(),
        writeset_size: txn.ws.len() as u32,
        relative_age: RelativeAge::of(txn.shared.timestamp, stats.oldest_conflicting(op_type)),
    }
}

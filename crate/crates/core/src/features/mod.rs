//! Per-operation state capture and the feature selector that compresses it
//! into a [`StateKey`].

mod raw;
mod selector;

pub use raw::{collect, Feature, RawFeatureVector, RelativeAge, FEATURE_COUNT};
pub use selector::{FeatureSelector, FeatureSpec, SelectorError, StateKey, Transform, TABLE_CAP};

use crate::engine::OpType;

/// Default bucket count for numeric features.
pub const DEFAULT_BUCKETS: u32 = 8;

/// Transaction type, executed-operation count and relative age.
pub fn default_selector(n_types: u16, max_ops: u32) -> FeatureSelector {
    let mut features = [FeatureSpec::excluded(); FEATURE_COUNT];
    features[Feature::TxnType.index()] = FeatureSpec::linear(n_types as u32, 0.0, n_types as f64);
    features[Feature::OpIndex.index()] = FeatureSpec::linear(max_ops, 1.0, max_ops as f64 + 1.0);
    features[Feature::RelativeAge.index()] = FeatureSpec::linear(3, 0.0, 3.0);
    FeatureSelector::new(1, features).expect("default selector within cap")
}

/// Per-type view of the state space: what the agent function can observe
/// statically about operation `op_index` of `txn_type`.
pub fn keys_for_op(sel: &FeatureSelector, txn_type: u16, op_index: u32, op_type: OpType) -> Vec<StateKey> {
    let probe = RawFeatureVector {
        txn_type,
        op_index,
        op_type,
        key_hotness: 0,
        dep_count: 0,
        dependents_count: 0,
        accessor_count: 0,
        writeset_size: 0,
        relative_age: RelativeAge::NoConflict,
    };
    let constraints: Vec<(Feature, u32)> = sel
        .included()
        .filter(|f| f.is_static())
        .map(|f| (f, sel.spec(f).bucket(f, probe.get(f))))
        .collect();
    sel.keys_matching(&constraints)
}

/// Sets the range of every included numeric feature to `[lo, p99]` of the
/// observed samples, keeping `lo` and widening degenerate ranges.
pub fn calibrate(sel: &mut FeatureSelector, samples: &[RawFeatureVector]) {
    if samples.is_empty() {
        return;
    }
    for f in Feature::ALL {
        if f.is_categorical() || f == Feature::OpIndex {
            continue;
        }
        let spec = &mut sel.features[f.index()];
        let mut vals: Vec<f64> = samples.iter().map(|x| x.get(f)).collect();
        vals.sort_by(f64::total_cmp);
        let p99 = vals[((vals.len() - 1) as f64 * 0.99).round() as usize];
        spec.hi = if p99 > spec.lo { p99 } else { spec.lo + 1.0 };
    }
}

use std::sync::Arc;

use super::action::{Action, DetectionMode, FIFO_PRIORITY, INFINITE_TIMEOUT};
use super::function::{AgentError, AgentFunction};
use crate::features::{Feature, FeatureSelector, RelativeAge};

fn require(sel: &FeatureSelector, feature: Feature) -> Result<(), AgentError> {
    if sel.includes(feature) {
        Ok(())
    } else {
        Err(AgentError::SelectorMissingFeature {
            selector: sel.id,
            feature,
        })
    }
}

/// Optimistic concurrency control: never detect, validate at commit.
pub fn encode_occ(selector: Arc<FeatureSelector>, n_types: usize) -> AgentFunction {
    let mut f = AgentFunction::new(selector, n_types);
    f.set_default(Action::new(DetectionMode::NoDetection, 0.0, 0.0, n_types));
    f
}

/// Two-phase locking with wait-die: a requester younger than the oldest
/// conflicting transaction dies immediately, an older one waits.
pub fn encode_2pl(selector: Arc<FeatureSelector>, n_types: usize) -> Result<AgentFunction, AgentError> {
    require(&selector, Feature::RelativeAge)?;
    let younger = selector.keys_matching(&[(Feature::RelativeAge, RelativeAge::Younger as u32)]);
    let mut f = AgentFunction::uniform(
        Arc::clone(&selector),
        n_types,
        Action::new(DetectionMode::DetectAll, INFINITE_TIMEOUT, FIFO_PRIORITY, n_types),
    );
    for k in younger {
        f.set_row(k, Action::new(DetectionMode::DetectAll, 0.0, FIFO_PRIORITY, n_types));
    }
    Ok(f)
}

/// Hotness-adaptive hybrid: cold keys run optimistically, hot keys lock,
/// the rest use critical-conflict detection. Thresholds are hotness bucket
/// indices: buckets `<= cold_max` are cold, buckets `>= hot_min` are hot.
pub fn encode_asocc(
    selector: Arc<FeatureSelector>,
    n_types: usize,
    cold_max: u32,
    hot_min: u32,
) -> Result<AgentFunction, AgentError> {
    require(&selector, Feature::KeyHotness)?;
    let mut f = AgentFunction::new(Arc::clone(&selector), n_types);
    for k in 0..selector.cardinality() {
        let key = crate::features::StateKey(k);
        let b = selector.bucket_of(key, Feature::KeyHotness).unwrap_or(0);
        let a = if b <= cold_max {
            Action::new(DetectionMode::NoDetection, 0.0, FIFO_PRIORITY, n_types)
        } else if b >= hot_min {
            Action::new(DetectionMode::DetectAll, INFINITE_TIMEOUT, FIFO_PRIORITY, n_types)
        } else {
            Action::new(DetectionMode::DetectCritical, 0.0, FIFO_PRIORITY, n_types)
        };
        f.set_row(key, a);
    }
    Ok(f)
}

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use super::raw::{Feature, RawFeatureVector, FEATURE_COUNT};

/// Upper bound on the number of distinct states a selector may produce.
pub const TABLE_CAP: u32 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transform {
    Linear,
    Sqrt,
    /// `ln(1 + x)`.
    Log,
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::Linear => x,
            Transform::Sqrt => x.max(0.0).sqrt(),
            Transform::Log => x.max(0.0).ln_1p(),
        }
    }

    fn token(self) -> &'static str {
        match self {
            Transform::Linear => "lin",
            Transform::Sqrt => "sqrt",
            Transform::Log => "log",
        }
    }

    pub const ALL: [Transform; 3] = [Transform::Linear, Transform::Sqrt, Transform::Log];
}

impl FromStr for Transform {
    type Err = SelectorError;
    fn from_str(s: &str) -> Result<Self, SelectorError> {
        match s {
            "lin" => Ok(Transform::Linear),
            "sqrt" => Ok(Transform::Sqrt),
            "log" => Ok(Transform::Log),
            other => Err(SelectorError::Parse(format!("unknown transform {other:?}"))),
        }
    }
}

/// Per-feature selection: whether it is part of the state, how it is
/// transformed and how finely the `[lo, hi)` range is bucketized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureSpec {
    pub include: bool,
    pub transform: Transform,
    pub buckets: u32,
    pub lo: f64,
    pub hi: f64,
}

impl FeatureSpec {
    pub const fn excluded() -> Self {
        FeatureSpec {
            include: false,
            transform: Transform::Linear,
            buckets: 1,
            lo: 0.0,
            hi: 1.0,
        }
    }

    pub const fn linear(buckets: u32, lo: f64, hi: f64) -> Self {
        FeatureSpec {
            include: true,
            transform: Transform::Linear,
            buckets,
            lo,
            hi,
        }
    }

    /// Bucket index of raw value `x`. Categorical features map their category
    /// index directly; numeric features are transformed and split uniformly.
    pub fn bucket(&self, feature: Feature, x: f64) -> u32 {
        let last = self.buckets.saturating_sub(1);
        if feature.is_categorical() {
            return (x.max(0.0) as u32).min(last);
        }
        let lo = self.transform.apply(self.lo);
        let hi = self.transform.apply(self.hi);
        if hi <= lo {
            return 0;
        }
        let frac = (self.transform.apply(x) - lo) / (hi - lo);
        if frac.is_nan() || frac <= 0.0 {
            return 0;
        }
        // the epsilon keeps integer-aligned bucket edges from rounding down
        ((frac * self.buckets as f64 + 1e-9).floor() as u32).min(last)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectorError {
    #[error("selector includes no feature")]
    Empty,
    #[error("feature f{0} has zero buckets")]
    ZeroBuckets(usize),
    #[error("selector produces {0} states, above the cap of {TABLE_CAP}")]
    TooManyStates(u64),
    #[error("selector parse error: {0}")]
    Parse(String),
}

/// Compact agent-function input: a mixed-radix index over the bucket
/// indices of the included features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(pub u32);

/// Feature selector `E`: picks, transforms and bucketizes raw features.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSelector {
    pub id: u32,
    pub features: [FeatureSpec; FEATURE_COUNT],
}

impl FeatureSelector {
    pub fn new(id: u32, features: [FeatureSpec; FEATURE_COUNT]) -> Result<Self, SelectorError> {
        let sel = FeatureSelector { id, features };
        sel.validate()?;
        Ok(sel)
    }

    pub fn validate(&self) -> Result<(), SelectorError> {
        if !self.features.iter().any(|f| f.include) {
            return Err(SelectorError::Empty);
        }
        let mut card: u64 = 1;
        for (i, f) in self.features.iter().enumerate() {
            if f.include {
                if f.buckets == 0 {
                    return Err(SelectorError::ZeroBuckets(i + 1));
                }
                card = card.saturating_mul(f.buckets as u64);
            }
        }
        if card > TABLE_CAP as u64 {
            return Err(SelectorError::TooManyStates(card));
        }
        Ok(())
    }

    pub fn includes(&self, f: Feature) -> bool {
        self.features[f.index()].include
    }

    pub fn spec(&self, f: Feature) -> &FeatureSpec {
        &self.features[f.index()]
    }

    /// Included features in canonical order.
    pub fn included(&self) -> impl Iterator<Item = Feature> + '_ {
        Feature::ALL.into_iter().filter(|f| self.includes(*f))
    }

    /// Number of distinct state keys.
    pub fn cardinality(&self) -> u32 {
        self.included().map(|f| self.spec(f).buckets).product()
    }

    /// `s = E(x)`.
    pub fn select(&self, x: &RawFeatureVector) -> StateKey {
        let mut key = 0u32;
        for f in self.included() {
            let spec = self.spec(f);
            key = key * spec.buckets + spec.bucket(f, x.get(f));
        }
        StateKey(key)
    }

    /// Builds a key from per-included-feature bucket indices.
    pub fn compose(&self, buckets: &[u32]) -> Option<StateKey> {
        let mut key = 0u32;
        let mut it = buckets.iter();
        for f in self.included() {
            let b = *it.next()?;
            let n = self.spec(f).buckets;
            if b >= n {
                return None;
            }
            key = key * n + b;
        }
        it.next().is_none().then_some(StateKey(key))
    }

    /// Inverse of [`compose`](Self::compose).
    pub fn decompose(&self, key: StateKey) -> Vec<u32> {
        let feats: Vec<Feature> = self.included().collect();
        let mut out = vec![0; feats.len()];
        let mut rest = key.0;
        for (i, f) in feats.iter().enumerate().rev() {
            let n = self.spec(*f).buckets;
            out[i] = rest % n;
            rest /= n;
        }
        out
    }

    /// Bucket index of `feature` inside `key`, if the feature is included.
    pub fn bucket_of(&self, key: StateKey, feature: Feature) -> Option<u32> {
        let pos = self.included().position(|f| f == feature)?;
        Some(self.decompose(key)[pos])
    }

    /// All state keys whose bucket for each constrained feature is the given
    /// one; unconstrained included features range over all buckets.
    pub fn keys_matching(&self, constraints: &[(Feature, u32)]) -> Vec<StateKey> {
        let feats: Vec<Feature> = self.included().collect();
        let choices: Vec<Vec<u32>> = feats
            .iter()
            .map(|f| {
                let n = self.spec(*f).buckets;
                match constraints.iter().find(|(cf, _)| cf == f) {
                    Some(&(_, b)) => vec![b.min(n - 1)],
                    None => (0..n).collect(),
                }
            })
            .collect();
        let mut keys = vec![Vec::new()];
        for options in &choices {
            keys = keys
                .into_iter()
                .flat_map(|prefix: Vec<u32>| {
                    options.iter().map(move |&b| {
                        let mut p = prefix.clone();
                        p.push(b);
                        p
                    })
                })
                .collect();
        }
        let mut out: Vec<StateKey> = keys.iter().filter_map(|b| self.compose(b)).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "selector {}", self.id);
        for (i, f) in self.features.iter().enumerate() {
            let _ = writeln!(
                s,
                "f{} include={} transform={} buckets={} range={}:{}",
                i + 1,
                u8::from(f.include),
                f.transform.token(),
                f.buckets,
                f.lo,
                f.hi
            );
        }
        s
    }

    /// Parses the text format. The `range=` token is optional and defaults
    /// to `0:<buckets>`.
    pub fn from_text(text: &str) -> Result<Self, SelectorError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| SelectorError::Parse("empty input".into()))?;
        let id = header
            .strip_prefix("selector ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| SelectorError::Parse(format!("bad header {header:?}")))?;
        let mut features = [FeatureSpec::excluded(); FEATURE_COUNT];
        for (i, spec) in features.iter_mut().enumerate() {
            let line = lines
                .next()
                .ok_or_else(|| SelectorError::Parse(format!("missing line for f{}", i + 1)))?;
            *spec = parse_feature_line(line, i + 1)?;
        }
        let sel = FeatureSelector { id, features };
        sel.validate()?;
        Ok(sel)
    }
}

fn parse_feature_line(line: &str, k: usize) -> Result<FeatureSpec, SelectorError> {
    let bad = |what: &str| SelectorError::Parse(format!("f{k}: {what} in {line:?}"));
    let mut toks = line.split_whitespace();
    if toks.next() != Some(&format!("f{k}")[..]) {
        return Err(bad("wrong feature tag"));
    }
    let mut include = None;
    let mut transform = None;
    let mut buckets = None;
    let mut range = None;
    for tok in toks {
        let (name, value) = tok.split_once('=').ok_or_else(|| bad("token without '='"))?;
        match name {
            "include" => {
                include = Some(match value {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad("include not 0/1")),
                })
            }
            "transform" => transform = Some(value.parse()?),
            "buckets" => buckets = Some(value.parse::<u32>().map_err(|_| bad("bad buckets"))?),
            "range" => {
                let (lo, hi) = value.split_once(':').ok_or_else(|| bad("bad range"))?;
                range = Some((
                    lo.parse::<f64>().map_err(|_| bad("bad range lo"))?,
                    hi.parse::<f64>().map_err(|_| bad("bad range hi"))?,
                ));
            }
            _ => return Err(bad("unknown field")),
        }
    }
    let buckets = buckets.ok_or_else(|| bad("missing buckets"))?;
    let (lo, hi) = range.unwrap_or((0.0, buckets as f64));
    Ok(FeatureSpec {
        include: include.ok_or_else(|| bad("missing include"))?,
        transform: transform.ok_or_else(|| bad("missing transform"))?,
        buckets,
        lo,
        hi,
    })
}

impl fmt::Display for FeatureSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self
            .included()
            .map(|feat| {
                let s = self.spec(feat);
                format!("{}[{}x{}]", feat.name(), s.transform.token(), s.buckets)
            })
            .collect();
        write!(f, "selector {} {{{}}}", self.id, names.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::raw::RelativeAge;
    use crate::engine::OpType;
    use proptest::prelude::*;

    fn only(feature: Feature, spec: FeatureSpec) -> FeatureSelector {
        let mut features = [FeatureSpec::excluded(); FEATURE_COUNT];
        features[feature.index()] = spec;
        FeatureSelector::new(1, features).unwrap()
    }

    fn raw() -> RawFeatureVector {
        RawFeatureVector {
            txn_type: 3,
            op_index: 2,
            op_type: OpType::Read,
            key_hotness: 0,
            dep_count: 0,
            dependents_count: 0,
            accessor_count: 0,
            writeset_size: 0,
            relative_age: RelativeAge::NoConflict,
        }
    }

    #[test]
    fn txn_type_only_selector_is_identity() {
        let sel = only(Feature::TxnType, FeatureSpec::linear(5, 0.0, 5.0));
        for t in 0..5 {
            let mut x = raw();
            x.txn_type = t;
            assert_eq!(sel.select(&x), StateKey(t as u32));
        }
        assert_eq!(sel.cardinality(), 5);
    }

    #[test]
    fn log_of_zero_lands_in_first_bucket() {
        let spec = FeatureSpec {
            transform: Transform::Log,
            ..FeatureSpec::linear(8, 0.0, 100.0)
        };
        assert_eq!(spec.bucket(Feature::KeyHotness, 0.0), 0);
        assert_eq!(Transform::Log.apply(0.0), 0.0);
        assert_eq!(spec.bucket(Feature::KeyHotness, 1e9), 7);
    }

    #[test]
    fn type_and_op_index_cover_full_grid() {
        let (types, max_ops) = (5u32, 46u32);
        let mut features = [FeatureSpec::excluded(); FEATURE_COUNT];
        features[Feature::TxnType.index()] = FeatureSpec::linear(types, 0.0, types as f64);
        features[Feature::OpIndex.index()] =
            FeatureSpec::linear(max_ops, 1.0, max_ops as f64 + 1.0);
        let sel = FeatureSelector::new(7, features).unwrap();
        assert_eq!(sel.cardinality(), types * max_ops);
        let mut seen = std::collections::HashSet::new();
        for t in 0..types {
            for i in 1..=max_ops {
                let mut x = raw();
                x.txn_type = t as u16;
                x.op_index = i;
                seen.insert(sel.select(&x));
            }
        }
        assert_eq!(seen.len() as u32, types * max_ops);
    }

    #[test]
    fn oversized_selector_rejected() {
        let mut features = [FeatureSpec::excluded(); FEATURE_COUNT];
        features[0] = FeatureSpec::linear(64, 0.0, 64.0);
        features[1] = FeatureSpec::linear(64, 0.0, 64.0);
        assert_eq!(
            FeatureSelector::new(1, features).unwrap_err(),
            SelectorError::TooManyStates(4096)
        );
        assert_eq!(
            FeatureSelector::new(1, [FeatureSpec::excluded(); FEATURE_COUNT]).unwrap_err(),
            SelectorError::Empty
        );
    }

    #[test]
    fn text_round_trip_and_errors() {
        let mut features = [FeatureSpec::excluded(); FEATURE_COUNT];
        features[0] = FeatureSpec::linear(3, 0.0, 3.0);
        features[3] = FeatureSpec {
            transform: Transform::Sqrt,
            ..FeatureSpec::linear(4, 0.0, 17.5)
        };
        let sel = FeatureSelector::new(42, features).unwrap();
        let text = sel.to_text();
        assert_eq!(text.lines().count(), 10);
        assert_eq!(FeatureSelector::from_text(&text).unwrap(), sel);
        let broken = text.replace("transform=sqrt", "transform=cube");
        assert!(FeatureSelector::from_text(&broken).is_err());
        let short: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(FeatureSelector::from_text(&short).is_err());
    }

    #[test]
    fn compose_decompose_round_trip() {
        let mut features = [FeatureSpec::excluded(); FEATURE_COUNT];
        features[0] = FeatureSpec::linear(3, 0.0, 3.0);
        features[1] = FeatureSpec::linear(10, 1.0, 11.0);
        features[8] = FeatureSpec::linear(3, 0.0, 3.0);
        let sel = FeatureSelector::new(2, features).unwrap();
        for k in 0..sel.cardinality() {
            let b = sel.decompose(StateKey(k));
            assert_eq!(sel.compose(&b), Some(StateKey(k)));
        }
        assert_eq!(sel.keys_matching(&[(Feature::TxnType, 1)]).len(), 30);
        assert_eq!(
            sel.keys_matching(&[(Feature::TxnType, 1), (Feature::OpIndex, 4)]).len(),
            3
        );
    }

    proptest! {
        #[test]
        fn bucketization_is_monotone(
            a in 0.0f64..500.0,
            b in 0.0f64..500.0,
            t in 0usize..3,
            n in 1u32..16,
        ) {
            let spec = FeatureSpec {
                transform: Transform::ALL[t],
                ..FeatureSpec::linear(n, 0.0, 300.0)
            };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(spec.bucket(Feature::KeyHotness, lo) <= spec.bucket(Feature::KeyHotness, hi));
        }

        #[test]
        fn select_is_total_and_in_range(
            ty in 0u16..8, idx in 1u32..60, hot in 0u32..1000, deps in 0u32..50,
        ) {
            let mut features = [FeatureSpec::excluded(); FEATURE_COUNT];
            features[0] = FeatureSpec::linear(4, 0.0, 4.0);
            features[1] = FeatureSpec::linear(8, 1.0, 9.0);
            features[3] = FeatureSpec { transform: Transform::Log, ..FeatureSpec::linear(4, 0.0, 64.0) };
            features[4] = FeatureSpec { transform: Transform::Sqrt, ..FeatureSpec::linear(4, 0.0, 16.0) };
            let sel = FeatureSelector::new(3, features).unwrap();
            let mut x = raw();
            x.txn_type = ty;
            x.op_index = idx;
            x.key_hotness = hot;
            x.dep_count = deps;
            let k = sel.select(&x);
            prop_assert!(k.0 < sel.cardinality());
            prop_assert_eq!(k, sel.select(&x));
        }
    }
}

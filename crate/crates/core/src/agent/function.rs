use std::fmt::Write as _;
use std::hash::Hasher;
use std::sync::Arc;

use thiserror::Error;

use super::action::{Action, DetectionMode};
use crate::features::{Feature, FeatureSelector, StateKey};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("selector {selector} does not include feature {}", .feature.name())]
    SelectorMissingFeature { selector: u32, feature: Feature },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid action for {key}: {msg}")]
    InvalidAction { key: String, msg: String },
}

fn parse_err(line: usize, msg: impl Into<String>) -> AgentError {
    AgentError::Parse {
        line,
        msg: msg.into(),
    }
}

/// State-to-action lookup table plus per-type retry backoffs.
///
/// The table is dense over the selector's key space; keys without an
/// explicit row resolve to the default row.
#[derive(Clone, Debug)]
pub struct AgentFunction {
    selector: Arc<FeatureSelector>,
    n_types: usize,
    rows: Vec<Option<Action>>,
    default: Action,
    backoff_us: Vec<f64>,
    version: u64,
}

/// Content equality: the runtime version stamp is ignored.
impl PartialEq for AgentFunction {
    fn eq(&self, other: &Self) -> bool {
        self.selector.id == other.selector.id
            && self.n_types == other.n_types
            && self.rows == other.rows
            && self.default == other.default
            && self.backoff_us == other.backoff_us
    }
}

impl AgentFunction {
    /// Table with only the conservative default row and zero backoffs.
    pub fn new(selector: Arc<FeatureSelector>, n_types: usize) -> Self {
        let card = selector.cardinality() as usize;
        AgentFunction {
            selector,
            n_types,
            rows: vec![None; card],
            default: Action::conservative(n_types),
            backoff_us: vec![0.0; n_types],
            version: 0,
        }
    }

    /// Every key mapped explicitly to `action`.
    pub fn uniform(selector: Arc<FeatureSelector>, n_types: usize, action: Action) -> Self {
        let mut f = AgentFunction::new(selector, n_types);
        for r in f.rows.iter_mut() {
            *r = Some(action.clone());
        }
        f
    }

    pub fn selector(&self) -> &Arc<FeatureSelector> {
        &self.selector
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub(crate) fn set_version(&mut self, v: u64) {
        self.version = v;
    }

    /// Number of addressable keys.
    pub fn key_count(&self) -> usize {
        self.rows.len()
    }

    /// Explicit rows.
    pub fn row_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_some()).count()
    }

    pub fn default_action(&self) -> &Action {
        &self.default
    }

    pub fn set_default(&mut self, a: Action) {
        self.default = a;
    }

    #[inline]
    pub fn get_cc(&self, s: StateKey) -> &Action {
        match self.rows.get(s.0 as usize) {
            Some(Some(a)) => a,
            _ => &self.default,
        }
    }

    pub fn row(&self, s: StateKey) -> Option<&Action> {
        self.rows.get(s.0 as usize).and_then(|r| r.as_ref())
    }

    pub fn set_row(&mut self, s: StateKey, a: Action) {
        if let Some(slot) = self.rows.get_mut(s.0 as usize) {
            *slot = Some(a);
        }
    }

    pub fn clear_row(&mut self, s: StateKey) {
        if let Some(slot) = self.rows.get_mut(s.0 as usize) {
            *slot = None;
        }
    }

    /// Explicit rows in key order.
    pub fn rows(&self) -> impl Iterator<Item = (StateKey, &Action)> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().map(|a| (StateKey(i as u32), a)))
    }

    /// Gives every key an explicit row, copying the default where absent.
    pub fn materialize(&mut self) {
        for r in self.rows.iter_mut() {
            if r.is_none() {
                *r = Some(self.default.clone());
            }
        }
    }

    pub fn row_mut(&mut self, s: StateKey) -> Option<&mut Action> {
        self.rows.get_mut(s.0 as usize).and_then(|r| r.as_mut())
    }

    pub fn backoff_us(&self, txn_type: u16) -> f64 {
        self.backoff_us.get(txn_type as usize).copied().unwrap_or(0.0)
    }

    pub fn backoffs(&self) -> &[f64] {
        &self.backoff_us
    }

    pub fn set_backoff(&mut self, txn_type: usize, us: f64) {
        self.backoff_us[txn_type] = us.max(0.0);
    }

    pub fn validate(&self, op_counts: Option<&[u32]>) -> Result<(), AgentError> {
        let all = std::iter::once(("*".to_string(), &self.default))
            .chain(self.rows().map(|(k, a)| (k.0.to_string(), a)));
        for (key, a) in all {
            if a.waits.len() != self.n_types {
                return Err(AgentError::InvalidAction {
                    key,
                    msg: format!("{} waits for {} types", a.waits.len(), self.n_types),
                });
            }
            a.check(op_counts)
                .map_err(|msg| AgentError::InvalidAction { key, msg })?;
        }
        Ok(())
    }

    /// FNV-1a over the serialized content.
    pub fn checksum(&self) -> u64 {
        let mut h = Fnv(0xcbf2_9ce4_8422_2325);
        h.write(self.to_text().as_bytes());
        h.finish()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "ccaalf-table v1 ntypes={} selector={}",
            self.n_types, self.selector.id
        );
        write_row(&mut s, "*", &self.default);
        for (k, a) in self.rows() {
            let fields: Vec<String> = self
                .selector
                .decompose(k)
                .iter()
                .map(|b| b.to_string())
                .collect();
            write_row(&mut s, &fields.join(","), a);
        }
        s.push_str("backoff");
        for b in &self.backoff_us {
            let _ = write!(s, " {b}");
        }
        s.push('\n');
        s
    }

    /// Parses the text format against `selector`, whose id must match the
    /// header.
    pub fn from_text(text: &str, selector: Arc<FeatureSelector>) -> Result<Self, AgentError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
        let mut toks = header.split_whitespace();
        if toks.next() != Some("ccaalf-table") || toks.next() != Some("v1") {
            return Err(parse_err(ln, "expected `ccaalf-table v1` header"));
        }
        let mut n_types = None;
        let mut sel_id = None;
        for t in toks {
            match t.split_once('=') {
                Some(("ntypes", v)) => n_types = v.parse::<usize>().ok(),
                Some(("selector", v)) => sel_id = v.parse::<u32>().ok(),
                _ => return Err(parse_err(ln, format!("unexpected header token {t:?}"))),
            }
        }
        let n_types = n_types.ok_or_else(|| parse_err(ln, "missing ntypes"))?;
        let sel_id = sel_id.ok_or_else(|| parse_err(ln, "missing selector"))?;
        if sel_id != selector.id {
            return Err(parse_err(
                ln,
                format!("table keyed by selector {sel_id}, given selector {}", selector.id),
            ));
        }
        let mut f = AgentFunction::new(selector, n_types);
        let mut saw_default = false;
        let mut saw_backoff = false;
        for (ln, line) in lines {
            if saw_backoff {
                return Err(parse_err(ln, "content after backoff footer"));
            }
            if let Some(rest) = line.strip_prefix("backoff") {
                let vals: Result<Vec<f64>, _> = rest.split_whitespace().map(str::parse).collect();
                let vals = vals.map_err(|e| parse_err(ln, format!("bad backoff: {e}")))?;
                if vals.len() != n_types {
                    return Err(parse_err(ln, format!("{} backoffs for {n_types} types", vals.len())));
                }
                f.backoff_us = vals;
                saw_backoff = true;
                continue;
            }
            let (key_part, action_part) = line
                .split_once('|')
                .ok_or_else(|| parse_err(ln, "row without `|`"))?;
            let action = parse_action(action_part, n_types).map_err(|m| parse_err(ln, m))?;
            let key_part = key_part.trim();
            if key_part == "*" {
                f.default = action;
                saw_default = true;
                continue;
            }
            let buckets: Result<Vec<u32>, _> = key_part.split(',').map(|b| b.trim().parse()).collect();
            let buckets = buckets.map_err(|e| parse_err(ln, format!("bad state key: {e}")))?;
            let key = f
                .selector
                .compose(&buckets)
                .ok_or_else(|| parse_err(ln, format!("state key {key_part:?} outside the selector's space")))?;
            f.rows[key.0 as usize] = Some(action);
        }
        if !saw_default {
            return Err(parse_err(0, "missing default row"));
        }
        if !saw_backoff {
            return Err(parse_err(0, "missing backoff footer"));
        }
        Ok(f)
    }
}

fn write_row(s: &mut String, key: &str, a: &Action) {
    let _ = write!(s, "{key} | {} ", a.detection.code());
    if a.timeout_us.is_finite() {
        let _ = write!(s, "{}", a.timeout_us);
    } else {
        s.push_str("inf");
    }
    let _ = write!(s, " {} {}", a.priority, u8::from(a.expose));
    for w in &a.waits {
        let _ = write!(s, " {w}");
    }
    s.push('\n');
}

fn parse_action(text: &str, n_types: usize) -> Result<Action, String> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.len() != 4 + n_types {
        return Err(format!("expected {} action fields, found {}", 4 + n_types, toks.len()));
    }
    let detection = toks[0]
        .parse::<u8>()
        .ok()
        .and_then(DetectionMode::from_code)
        .ok_or_else(|| format!("bad detection mode {:?}", toks[0]))?;
    let timeout_us = match toks[1] {
        "inf" => f64::INFINITY,
        t => t.parse::<f64>().map_err(|_| format!("bad timeout {t:?}"))?,
    };
    let priority = toks[2]
        .parse::<f32>()
        .map_err(|_| format!("bad priority {:?}", toks[2]))?;
    let expose = match toks[3] {
        "0" => false,
        "1" => true,
        e => return Err(format!("bad expose flag {e:?}")),
    };
    let waits: Result<Vec<u32>, _> = toks[4..].iter().map(|w| w.parse::<u32>()).collect();
    let a = Action {
        detection,
        timeout_us,
        priority,
        waits: waits.map_err(|e| format!("bad wait: {e}"))?,
        expose,
    };
    a.check(None)?;
    Ok(a)
}

struct Fnv(u64);

impl Hasher for Fnv {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= *b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::INFINITE_TIMEOUT;
    use crate::features::default_selector;
    use proptest::prelude::*;

    fn sel() -> Arc<FeatureSelector> {
        Arc::new(default_selector(2, 4))
    }

    #[test]
    fn lookup_hits_row_or_default() {
        let mut f = AgentFunction::new(sel(), 2);
        let a = Action::new(DetectionMode::NoDetection, 5.0, 0.1, 2);
        f.set_row(StateKey(3), a.clone());
        assert_eq!(f.get_cc(StateKey(3)), &a);
        assert_eq!(f.get_cc(StateKey(4)), &Action::conservative(2));
        assert_eq!(f.get_cc(StateKey(9999)), &Action::conservative(2));
    }

    #[test]
    fn default_only_table_has_one_row_line() {
        let f = AgentFunction::new(sel(), 2);
        let text = f.to_text();
        let rows: Vec<&str> = text.lines().filter(|l| l.contains('|')).collect();
        assert_eq!(rows, vec!["* | 2 inf 0.5 0 0 0"]);
        assert_eq!(AgentFunction::from_text(&text, sel()).unwrap(), f);
    }

    #[test]
    fn corrupted_field_count_reports_line() {
        let mut f = AgentFunction::new(sel(), 2);
        f.set_row(StateKey(1), Action::new(DetectionMode::DetectCritical, 1.5, 0.3, 2));
        let text = f.to_text().replace("1 1.5 0.3 0 0 0", "1 1.5 0.3 0 0");
        match AgentFunction::from_text(&text, sel()) {
            Err(AgentError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn selector_mismatch_rejected() {
        let f = AgentFunction::new(sel(), 2);
        let mut other = default_selector(2, 4);
        other.id = 99;
        assert!(AgentFunction::from_text(&f.to_text(), Arc::new(other)).is_err());
    }

    fn arb_action(n: usize) -> impl Strategy<Value = Action> {
        (
            0u8..3,
            prop_oneof![Just(INFINITE_TIMEOUT), 0.0f64..1e7],
            0.0f32..=1.0,
            proptest::collection::vec(0u32..50, n),
            any::<bool>(),
        )
            .prop_map(|(d, t, p, waits, expose)| Action {
                detection: DetectionMode::from_code(d).unwrap(),
                timeout_us: t,
                priority: p,
                waits,
                expose,
            })
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(
            rows in proptest::collection::vec((0u32..24, arb_action(2)), 0..24),
            default in arb_action(2),
            backoff in proptest::collection::vec(0.0f64..1e6, 2),
        ) {
            let mut f = AgentFunction::new(sel(), 2);
            f.set_default(default);
            for (k, a) in rows {
                f.set_row(StateKey(k), a);
            }
            for (i, b) in backoff.into_iter().enumerate() {
                f.set_backoff(i, b);
            }
            let back = AgentFunction::from_text(&f.to_text(), sel()).unwrap();
            prop_assert_eq!(&back, &f);
            for (k, a) in f.rows() {
                let b = back.get_cc(k);
                prop_assert_eq!(a.timeout_us.to_bits(), b.timeout_us.to_bits());
                prop_assert_eq!(a.priority.to_bits(), b.priority.to_bits());
            }
            prop_assert_eq!(back.checksum(), f.checksum());
        }

        #[test]
        fn get_cc_is_pure(k in 0u32..40) {
            let mut f = AgentFunction::new(sel(), 2);
            f.set_row(StateKey(2), Action::new(DetectionMode::NoDetection, 0.0, 0.0, 2));
            prop_assert_eq!(f.get_cc(StateKey(k)), f.get_cc(StateKey(k)));
        }
    }
}

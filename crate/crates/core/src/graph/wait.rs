use std::sync::Arc;

use super::{ConflictGraph, Modifications, Node};
use crate::agent::{Action, AgentFunction, DetectionMode, FIFO_PRIORITY, INFINITE_TIMEOUT};
use crate::engine::OpType;
use crate::features::{keys_for_op, FeatureSelector, StateKey};
use crate::workload::StaticWorkload;

/// How far into a type-`other` dependency `op` must wait, ignoring merges
/// on `op`'s own side: the last conflicting slot of `other`, or for a write
/// the point where that slot's piece is exposed.
pub fn raw_wait(g: &ConflictGraph, mods: &Modifications, op: Node, other: u16) -> u32 {
    let n = g.op_count(other);
    let mut expose_point = n + 1;
    for i in (1..=n).rev() {
        let peer = Node::new(other, i);
        if !mods.merged(peer) {
            expose_point = i;
        }
        if g.has_cut_edge(mods, op, peer) {
            return match g.op_type(peer) {
                OpType::Read => i,
                OpType::Write => expose_point,
            };
        }
    }
    0
}

/// Wait of `op` on type `other`, given the raw waits of the writes that
/// become visible right before `op` (`last_exposed`). Those writes are
/// deferred to `op` and must not be exposed before their own waits hold.
pub fn get_wait_actions(
    g: &ConflictGraph,
    mods: &Modifications,
    op: Node,
    other: u16,
    last_exposed: &[(Node, u32)],
) -> u32 {
    let mut res = match g.op_type(op) {
        OpType::Read => raw_wait(g, mods, op, other),
        OpType::Write => 0,
    };
    for &(prev, w) in last_exposed {
        if g.op_type(prev).is_write() && w > res {
            res = w;
        }
    }
    res
}

/// `waits[t][t2][i - 1]`: pipeline wait of slot `i` of type `t` on a type
/// `t2` dependency.
#[derive(Clone, Debug, PartialEq)]
pub struct WaitTable {
    pub waits: Vec<Vec<Vec<u32>>>,
}

impl WaitTable {
    pub fn get(&self, n: Node, other: u16) -> u32 {
        self.waits[n.txn_type as usize][other as usize][n.op_index as usize - 1]
    }
}

pub fn wait_table(g: &ConflictGraph, mods: &Modifications) -> WaitTable {
    let types = g.n_types() as u16;
    let mut waits = Vec::with_capacity(types as usize);
    for t in 0..types {
        let n = g.op_count(t);
        let mut per_other = Vec::with_capacity(types as usize);
        for other in 0..types {
            let mut raw = vec![0u32; n as usize];
            let mut row = vec![0u32; n as usize];
            let mut unexposed: Vec<u32> = Vec::new();
            let mut to_expose: Vec<(Node, u32)> = Vec::new();
            for i in 1..=n {
                let op = Node::new(t, i);
                raw[i as usize - 1] = raw_wait(g, mods, op, other);
                row[i as usize - 1] = get_wait_actions(g, mods, op, other, &to_expose);
                unexposed.push(i);
                to_expose.clear();
                if !mods.merged(op) {
                    to_expose = unexposed
                        .drain(..)
                        .map(|j| (Node::new(t, j), raw[j as usize - 1]))
                        .collect();
                }
            }
            per_other.push(row);
        }
        waits.push(per_other);
    }
    WaitTable { waits }
}

/// For every state key, the graph slots whose executions can map to it.
pub fn producers(g: &ConflictGraph, sel: &FeatureSelector) -> Vec<Vec<Node>> {
    let mut out = vec![Vec::new(); sel.cardinality() as usize];
    for n in g.nodes() {
        for k in keys_for_op(sel, n.txn_type, n.op_index, g.op_type(n)) {
            out[k.0 as usize].push(n);
        }
    }
    out
}

fn derive(g: &ConflictGraph, mods: &Modifications, base: &AgentFunction, isolate: bool) -> AgentFunction {
    let table = wait_table(g, mods);
    let prods = producers(g, base.selector());
    let types = g.n_types() as u16;
    let mut f = base.clone();
    for (k, ps) in prods.iter().enumerate() {
        let key = StateKey(k as u32);
        let mut a = f.get_cc(key).clone();
        a.waits = (0..types)
            .map(|o| ps.iter().map(|&p| table.get(p, o)).max().unwrap_or(0))
            .collect();
        if isolate && ps.iter().all(|&p| mods.cut(p)) {
            a.detection = DetectionMode::NoDetection;
        }
        a.expose = ps.iter().all(|&p| !mods.merged(p));
        f.set_row(key, a);
    }
    f
}

/// Re-derives every row's pipeline waits and expose flag from the reduced
/// graph. Rows whose slots are all cut run without detection; every other
/// field is carried over from `f_best`.
pub fn update_wait_actions(g: &ConflictGraph, mods: &Modifications, f_best: &AgentFunction) -> AgentFunction {
    derive(g, mods, f_best, true)
}

/// Transaction chopping on the full graph: every operation detects critical
/// conflicts, exposes its writes immediately and pipelines behind its
/// dependencies as far as the graph demands.
pub fn encode_ic3(selector: Arc<FeatureSelector>, statics: &StaticWorkload) -> AgentFunction {
    let n = statics.types.len();
    let g = super::build_full_graph(statics);
    let act = Action::new(DetectionMode::DetectCritical, INFINITE_TIMEOUT, FIFO_PRIORITY, n).with_expose(true);
    let mut base = AgentFunction::uniform(selector, n, act.clone());
    let mut default = act;
    default.waits = statics.types.iter().map(|t| t.ops.len() as u32).collect();
    base.set_default(default);
    derive(&g, &Modifications::all_false(&g), &base, false)
}

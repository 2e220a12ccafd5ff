//! Static conflict graph over `(transaction type, operation index)` nodes,
//! the merge/cut modifications searched over, and the pipeline-wait
//! derivation from a (reduced) graph.

mod search;
mod wait;

pub use search::{
    diff, flip, graph_reduction_search, mutate, Individual, SearchConfig, SearchResult, SearchStep,
};
pub use wait::{
    encode_ic3, get_wait_actions, producers, raw_wait, update_wait_actions, wait_table, WaitTable,
};

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::engine::OpType;
use crate::workload::{StaticOp, StaticWorkload};

/// One operation slot: 1-based `op_index` within `txn_type`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub txn_type: u16,
    pub op_index: u32,
}

impl Node {
    pub fn new(txn_type: u16, op_index: u32) -> Self {
        Node { txn_type, op_index }
    }
}

impl std::fmt::Display for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.txn_type, self.op_index)
    }
}

/// Nodes are operation slots; an edge joins two distinct slots that touch
/// the same table where at least one writes.
#[derive(Clone, Debug)]
pub struct ConflictGraph {
    ops: Vec<Vec<StaticOp>>,
    learned: Vec<bool>,
    offsets: Vec<usize>,
    adj: Vec<Vec<usize>>,
    edges: usize,
}

pub fn build_full_graph(statics: &StaticWorkload) -> ConflictGraph {
    let ops: Vec<Vec<StaticOp>> = statics.types.iter().map(|t| t.ops.clone()).collect();
    let mut offsets = Vec::with_capacity(ops.len());
    let mut all = Vec::new();
    for t in &ops {
        offsets.push(all.len());
        all.extend(t.iter().copied());
    }
    let mut adj = vec![Vec::new(); all.len()];
    let mut edges = 0;
    for a in 0..all.len() {
        for b in a + 1..all.len() {
            if all[a].table == all[b].table && (all[a].op_type.is_write() || all[b].op_type.is_write()) {
                adj[a].push(b);
                adj[b].push(a);
                edges += 1;
            }
        }
    }
    ConflictGraph {
        learned: statics.types.iter().map(|t| t.learned).collect(),
        ops,
        offsets,
        adj,
        edges,
    }
}

impl ConflictGraph {
    pub fn n_types(&self) -> usize {
        self.ops.len()
    }

    pub fn op_count(&self, txn_type: u16) -> u32 {
        self.ops[txn_type as usize].len() as u32
    }

    pub fn op(&self, n: Node) -> StaticOp {
        self.ops[n.txn_type as usize][n.op_index as usize - 1]
    }

    pub fn op_type(&self, n: Node) -> OpType {
        self.op(n).op_type
    }

    pub fn is_learned(&self, txn_type: u16) -> bool {
        self.learned[txn_type as usize]
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.ops.iter().enumerate().flat_map(|(t, ops)| {
            (1..=ops.len() as u32).map(move |i| Node::new(t as u16, i))
        })
    }

    fn id(&self, n: Node) -> usize {
        self.offsets[n.txn_type as usize] + n.op_index as usize - 1
    }

    fn node_of(&self, id: usize) -> Node {
        let t = self.offsets.partition_point(|&o| o <= id) - 1;
        Node::new(t as u16, (id - self.offsets[t]) as u32 + 1)
    }

    pub fn has_edge(&self, a: Node, b: Node) -> bool {
        self.adj[self.id(a)].binary_search(&self.id(b)).is_ok()
    }

    /// Edge present after removing every edge that touches a cut node.
    pub fn has_cut_edge(&self, mods: &Modifications, a: Node, b: Node) -> bool {
        !mods.cut(a) && !mods.cut(b) && self.has_edge(a, b)
    }

    /// Edges as ordered node pairs `a < b`.
    pub fn edges(&self) -> Vec<(Node, Node)> {
        let mut out = Vec::with_capacity(self.edges);
        for (a, ns) in self.adj.iter().enumerate() {
            for &b in ns.iter().filter(|&&b| b > a) {
                out.push((self.node_of(a), self.node_of(b)));
            }
        }
        out
    }

    /// `(nodes, edges)` after merging and cutting: each maximal run of merged
    /// slots is one node, and parallel edges between merged nodes count once.
    pub fn effective_size(&self, mods: &Modifications) -> (usize, usize) {
        let group = |n: Node| -> (u16, u32) {
            let mut end = n.op_index;
            while mods.merged(Node::new(n.txn_type, end)) {
                end += 1;
            }
            (n.txn_type, end)
        };
        let nodes = self.nodes().filter(|&n| !mods.merged(n)).count();
        let mut edges = BTreeSet::new();
        for (a, b) in self.edges() {
            if mods.cut(a) || mods.cut(b) {
                continue;
            }
            let (ga, gb) = (group(a), group(b));
            if ga != gb {
                edges.insert((ga.min(gb), ga.max(gb)));
            }
        }
        (nodes, edges.len())
    }

    /// Debug dump: `node`, `edge`, then `merge`/`cut` lines for `mods`.
    pub fn dump(&self, mods: Option<&Modifications>) -> String {
        let mut s = String::new();
        for n in self.nodes() {
            let _ = writeln!(s, "node {n}");
        }
        for (a, b) in self.edges() {
            let _ = writeln!(s, "edge {a} {b}");
        }
        if let Some(m) = mods {
            for n in self.nodes() {
                if m.merged(n) {
                    let _ = writeln!(s, "merge {n}");
                }
            }
            for n in self.nodes() {
                if m.cut(n) {
                    let _ = writeln!(s, "cut {n}");
                }
            }
        }
        s
    }
}

/// Parsed form of [`ConflictGraph::dump`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphDump {
    pub nodes: Vec<Node>,
    pub edges: Vec<(Node, Node)>,
    pub merges: Vec<Node>,
    pub cuts: Vec<Node>,
}

pub fn parse_dump(text: &str) -> Result<GraphDump, String> {
    fn node(tok: Option<&str>, line: usize) -> Result<Node, String> {
        let tok = tok.ok_or_else(|| format!("line {line}: missing node"))?;
        let (t, i) = tok
            .split_once(':')
            .ok_or_else(|| format!("line {line}: bad node {tok:?}"))?;
        match (t.parse(), i.parse()) {
            (Ok(t), Ok(i)) if i > 0 => Ok(Node::new(t, i)),
            _ => Err(format!("line {line}: bad node {tok:?}")),
        }
    }
    let mut d = GraphDump::default();
    for (i, l) in text.lines().enumerate() {
        let mut it = l.split_whitespace();
        match it.next() {
            None => {}
            Some("node") => d.nodes.push(node(it.next(), i + 1)?),
            Some("edge") => {
                let a = node(it.next(), i + 1)?;
                let b = node(it.next(), i + 1)?;
                d.edges.push((a, b));
            }
            Some("merge") => d.merges.push(node(it.next(), i + 1)?),
            Some("cut") => d.cuts.push(node(it.next(), i + 1)?),
            Some(other) => return Err(format!("line {}: unknown record {other:?}", i + 1)),
        }
    }
    Ok(d)
}

/// Merge (`V_e`) and cut (`V_o`) flags per node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Modifications {
    merge: Vec<Vec<bool>>,
    cut: Vec<Vec<bool>>,
}

impl Modifications {
    pub fn all_false(g: &ConflictGraph) -> Self {
        let shape: Vec<Vec<bool>> = g.ops.iter().map(|t| vec![false; t.len()]).collect();
        Modifications {
            merge: shape.clone(),
            cut: shape,
        }
    }

    /// Merged with the next slot of the same type.
    pub fn merged(&self, n: Node) -> bool {
        self.merge[n.txn_type as usize]
            .get(n.op_index as usize - 1)
            .copied()
            .unwrap_or(false)
    }

    /// Treated optimistically: all incident edges removed.
    pub fn cut(&self, n: Node) -> bool {
        self.cut[n.txn_type as usize]
            .get(n.op_index as usize - 1)
            .copied()
            .unwrap_or(false)
    }

    /// Sets the merge flag; ignored on a type's last slot.
    pub fn set_merged(&mut self, n: Node, v: bool) {
        let row = &mut self.merge[n.txn_type as usize];
        let i = n.op_index as usize - 1;
        if i + 1 < row.len() {
            row[i] = v;
        }
    }

    pub fn set_cut(&mut self, n: Node, v: bool) {
        self.cut[n.txn_type as usize][n.op_index as usize - 1] = v;
    }

    pub fn true_count(&self) -> usize {
        self.merge
            .iter()
            .chain(&self.cut)
            .map(|r| r.iter().filter(|&&b| b).count())
            .sum()
    }

    pub fn is_all_false(&self) -> bool {
        self.true_count() == 0
    }

    /// Every flag set in `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Modifications) -> bool {
        let sub = |a: &Vec<Vec<bool>>, b: &Vec<Vec<bool>>| {
            a.iter().zip(b).all(|(x, y)| x.iter().zip(y).all(|(&p, &q)| !p || q))
        };
        sub(&self.merge, &other.merge) && sub(&self.cut, &other.cut)
    }

    /// Canonical bit string over merge flags then cut flags.
    pub fn fingerprint(&self) -> String {
        let bits = |rows: &Vec<Vec<bool>>| -> String {
            rows.iter()
                .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>())
                .collect::<Vec<_>>()
                .join(".")
        };
        format!("{}|{}", bits(&self.merge), bits(&self.cut))
    }
}

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::history::{History, RecordLevel};
use crate::engine::{Key, OpType, Payload, TxnId, VersionId};
use crate::workload::{fold_read, write_payload};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("incomplete history: {0}")]
    IncompleteHistory(String),
    #[error("serial number {0} used twice")]
    DuplicateSerial(u64),
    #[error("{txn} (seq {seq}) op {op_index} read {key} as {recorded}, serial replay gives {replayed}")]
    ReadMismatch {
        txn: TxnId,
        seq: u64,
        op_index: u32,
        key: Key,
        recorded: VersionId,
        replayed: VersionId,
    },
    #[error("{txn} wrote {key} as {recorded:016x}, serial replay gives {replayed:016x}")]
    WriteMismatch {
        txn: TxnId,
        key: Key,
        recorded: u64,
        replayed: u64,
    },
    #[error("final state of {key}: store has {stored}, serial replay gives {replayed}")]
    FinalStateMismatch {
        key: Key,
        stored: VersionId,
        replayed: VersionId,
    },
    #[error("dependency cycle among committed transactions: {0:?}")]
    Cycle(Vec<TxnId>),
}

/// Replays the committed transactions one at a time in serialization order
/// from the initial snapshot. Every read must observe the same version
/// identity the engine recorded, every write must carry the same payload,
/// and the replayed final state must equal the engine's.
pub fn check_serializable(h: &History) -> Result<(), OracleError> {
    if h.level != Some(RecordLevel::Full) {
        return Err(OracleError::IncompleteHistory(format!(
            "recorded at level {:?}, replay needs Full",
            h.level
        )));
    }
    let Some(final_state) = &h.final_state else {
        return Err(OracleError::IncompleteHistory("no final state".into()));
    };
    let mut db: HashMap<Key, (VersionId, Payload)> = h
        .initial
        .iter()
        .map(|(k, p)| {
            (
                *k,
                (
                    VersionId {
                        writer: TxnId::LOADER,
                        wseq: 0,
                    },
                    p.clone(),
                ),
            )
        })
        .collect();
    let mut order: Vec<_> = h.txns.iter().collect();
    order.sort_by_key(|t| t.seq);
    for w in order.windows(2) {
        if w[0].seq == w[1].seq {
            return Err(OracleError::DuplicateSerial(w[0].seq));
        }
    }
    for t in order {
        let mut local: HashMap<Key, (u32, Payload)> = HashMap::new();
        let mut digest = 0u64;
        let mut reads = t.reads.iter();
        for (i, op) in t.ops.iter().enumerate() {
            let op_index = i as u32 + 1;
            match op.op_type {
                OpType::Read => {
                    let (id, payload) = match local.get(&op.key) {
                        Some((wseq, p)) => (
                            VersionId {
                                writer: t.id,
                                wseq: *wseq,
                            },
                            p.clone(),
                        ),
                        None => db.get(&op.key).cloned().ok_or_else(|| {
                            OracleError::IncompleteHistory(format!("{} not in initial snapshot", op.key))
                        })?,
                    };
                    let rec = reads.next().ok_or_else(|| {
                        OracleError::IncompleteHistory(format!("{} has fewer reads than read ops", t.id))
                    })?;
                    if rec.op_index != op_index || rec.key != op.key {
                        return Err(OracleError::IncompleteHistory(format!(
                            "{} read record {}@{} does not match op {}@{}",
                            t.id, rec.key, rec.op_index, op.key, op_index
                        )));
                    }
                    if rec.version != id {
                        return Err(OracleError::ReadMismatch {
                            txn: t.id,
                            seq: t.seq,
                            op_index,
                            key: op.key,
                            recorded: rec.version,
                            replayed: id,
                        });
                    }
                    digest = fold_read(digest, &payload);
                }
                OpType::Write => {
                    let p = write_payload(t.seed, op_index, digest);
                    let e = local.entry(op.key).or_insert((0, p.clone()));
                    e.0 += 1;
                    e.1 = p;
                }
            }
        }
        if reads.next().is_some() {
            return Err(OracleError::IncompleteHistory(format!("{} has extra read records", t.id)));
        }
        if t.writes.len() != local.len() {
            return Err(OracleError::IncompleteHistory(format!(
                "{} recorded {} writes, replay produced {}",
                t.id,
                t.writes.len(),
                local.len()
            )));
        }
        for w in &t.writes {
            let replayed = local.get(&w.key).map_or(0, |(_, p)| p.as_u64());
            if replayed != w.payload.as_u64() {
                return Err(OracleError::WriteMismatch {
                    txn: t.id,
                    key: w.key,
                    recorded: w.payload.as_u64(),
                    replayed,
                });
            }
        }
        for (k, (wseq, p)) in local {
            db.insert(k, (VersionId { writer: t.id, wseq }, p));
        }
    }
    for (k, id, payload) in final_state {
        let Some((rid, rp)) = db.get(k) else {
            return Err(OracleError::IncompleteHistory(format!("{k} missing from replay")));
        };
        if rid != id || rp != payload {
            return Err(OracleError::FinalStateMismatch {
                key: *k,
                stored: *id,
                replayed: *rid,
            });
        }
    }
    Ok(())
}

/// Checks that the dependencies recorded among committed transactions
/// (dirty reads and anti-dependencies) form a DAG.
pub fn check_commit_dag_acyclic(h: &History) -> Result<(), OracleError> {
    let committed: HashSet<TxnId> = h.txns.iter().map(|t| t.id).collect();
    let mut indeg: HashMap<TxnId, usize> = committed.iter().map(|&t| (t, 0)).collect();
    let mut out: HashMap<TxnId, Vec<TxnId>> = HashMap::new();
    for t in &h.txns {
        for &(d, _) in &t.deps {
            if committed.contains(&d) && d != t.id {
                out.entry(d).or_default().push(t.id);
                *indeg.get_mut(&t.id).expect("committed") += 1;
            }
        }
    }
    let mut ready: Vec<TxnId> = indeg.iter().filter(|(_, &n)| n == 0).map(|(&t, _)| t).collect();
    let mut seen = 0;
    while let Some(t) = ready.pop() {
        seen += 1;
        for &n in out.get(&t).map(Vec::as_slice).unwrap_or(&[]) {
            let d = indeg.get_mut(&n).expect("committed");
            *d -= 1;
            if *d == 0 {
                ready.push(n);
            }
        }
    }
    if seen == committed.len() {
        Ok(())
    } else {
        let mut stuck: Vec<TxnId> = indeg.into_iter().filter(|&(_, n)| n > 0).map(|(t, _)| t).collect();
        stuck.sort();
        Err(OracleError::Cycle(stuck))
    }
}

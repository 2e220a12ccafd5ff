use std::sync::Arc;

use super::key::TxnId;
use super::version::{Payload, Version};

/// Chains longer than this get their superseded committed versions pruned.
pub const GC_THRESHOLD: usize = 8;

/// Per-tuple version list, oldest first.
///
/// Committed and dirty versions are interleaved in append order. The latest
/// committed version is the newest entry with `committed == true`; the tail is
/// whatever was appended last. Each writer owns at most one dirty entry.
#[derive(Clone, Debug, Default)]
pub struct VersionChain {
    versions: Vec<Arc<Version>>,
}

impl VersionChain {
    pub fn with_initial(v: Version) -> Self {
        VersionChain {
            versions: vec![Arc::new(v)],
        }
    }

    pub fn versions(&self) -> &[Arc<Version>] {
        &self.versions
    }

    pub fn len(&self) -> usize {
        self.versions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.versions.is_empty()
    }

    pub fn latest_committed(&self) -> Option<&Arc<Version>> {
        self.versions.iter().rev().find(|v| v.committed)
    }

    pub fn latest_any(&self) -> Option<&Arc<Version>> {
        self.versions.last()
    }

    /// Newest version not written (dirty) by `txn`. Used by early validation,
    /// which must not trip over the validating transaction's own exposed data.
    pub fn latest_excluding_dirty_of(&self, txn: TxnId) -> Option<&Arc<Version>> {
        self.versions
            .iter()
            .rev()
            .find(|v| v.committed || v.writer != txn)
    }

    pub fn dirty_of(&self, txn: TxnId) -> Option<&Arc<Version>> {
        self.versions
            .iter()
            .find(|v| !v.committed && v.writer == txn)
    }

    pub fn dirty_count(&self) -> usize {
        self.versions.iter().filter(|v| !v.committed).count()
    }

    /// Places a dirty version at the tail, replacing an older dirty version
    /// of the same writer.
    pub fn append_dirty(&mut self, writer: TxnId, wseq: u32, payload: Payload) {
        self.remove_dirty(writer);
        self.versions
            .push(Arc::new(Version::dirty(writer, wseq, payload)));
    }

    /// Drops `txn`'s dirty version. Returns whether one existed.
    pub fn remove_dirty(&mut self, txn: TxnId) -> bool {
        match self
            .versions
            .iter()
            .position(|v| !v.committed && v.writer == txn)
        {
            Some(i) => {
                self.versions.remove(i);
                true
            }
            None => false,
        }
    }

    /// Replaces `txn`'s dirty version (if any) by a committed tail version.
    pub fn promote_commit(&mut self, txn: TxnId, wseq: u32, payload: Payload) {
        self.remove_dirty(txn);
        self.versions
            .push(Arc::new(Version::committed(txn, wseq, payload)));
        self.gc();
    }

    /// Prunes committed versions older than the newest committed one once
    /// the chain exceeds [`GC_THRESHOLD`]. Dirty versions are kept.
    pub fn gc(&mut self) {
        if self.versions.len() <= GC_THRESHOLD {
            return;
        }
        let newest = match self.versions.iter().rposition(|v| v.committed) {
            Some(i) => i,
            None => return,
        };
        let mut idx = 0;
        self.versions.retain(|v| {
            let keep = !v.committed || idx == newest;
            idx += 1;
            keep
        });
    }
}

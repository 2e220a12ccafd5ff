use std::fmt;
use std::sync::Arc;

use super::key::TxnId;

/// Opaque tuple payload. Cloning is a reference-count bump.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Payload(Arc<[u8]>);

impl Payload {
    pub fn new(bytes: &[u8]) -> Self {
        Payload(Arc::from(bytes))
    }

    pub fn from_u64(v: u64) -> Self {
        Payload::new(&v.to_le_bytes())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// First eight bytes as a little-endian integer (zero padded).
    pub fn as_u64(&self) -> u64 {
        let mut buf = [0u8; 8];
        let n = self.0.len().min(8);
        buf[..n].copy_from_slice(&self.0[..n]);
        u64::from_le_bytes(buf)
    }
}

impl fmt::Debug for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Payload(")?;
        for b in self.0.iter() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

/// Identity of a version: its writer plus the writer's per-key write count.
///
/// A transaction that writes the same key twice produces two identities,
/// so a reader of the first (exposed) write never validates against the
/// second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VersionId {
    pub writer: TxnId,
    pub wseq: u32,
}

impl fmt::Display for VersionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.writer, self.wseq)
    }
}

/// One immutable tuple version. Promotion to committed creates a new
/// `Version` rather than flipping the flag in place.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Version {
    pub writer: TxnId,
    pub wseq: u32,
    pub payload: Payload,
    pub committed: bool,
}

impl Version {
    pub fn committed(writer: TxnId, wseq: u32, payload: Payload) -> Self {
        Version {
            writer,
            wseq,
            payload,
            committed: true,
        }
    }

    pub fn dirty(writer: TxnId, wseq: u32, payload: Payload) -> Self {
        Version {
            writer,
            wseq,
            payload,
            committed: false,
        }
    }

    pub fn id(&self) -> VersionId {
        VersionId {
            writer: self.writer,
            wseq: self.wseq,
        }
    }
}

//! Multi-version tuple store and transaction runtime types.

mod chain;
mod key;
mod store;
mod txn;
mod version;

pub use chain::{VersionChain, GC_THRESHOLD};
pub use key::{Key, TableId, TxnId};
pub use store::{
    decayed, DirtyReader, EngineError, Holder, LatchMode, Store, Tuple, TupleGuard, TupleState, TupleStats,
    Waiter, HOTNESS_HALF_LIFE,
};
pub use txn::{
    DepEntry, Mode, OpType, Operation, ReadEntry, Transaction, TxnShared, TxnStatus, WaitOutcome,
    WriteEntry,
};
pub use version::{Payload, Version, VersionId};

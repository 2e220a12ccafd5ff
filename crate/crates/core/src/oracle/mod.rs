//! History recording and the serial-replay serializability check.

mod check;
mod history;

pub use check::{check_commit_dag_acyclic, check_serializable, OracleError};
pub use history::{History, ReadRecord, RecordLevel, Recorder, TxnRecord, WriteRecord};

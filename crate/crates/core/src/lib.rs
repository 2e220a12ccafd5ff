//! Multi-version in-memory transaction engine whose concurrency control is a
//! learnable lookup table from per-operation state to action, together with
//! the offline optimizer that searches for a good table.

pub mod agent;
pub mod cli;
pub mod engine;
pub mod executor;
pub mod features;
pub mod graph;
pub mod optimizer;
pub mod oracle;
pub mod workload;

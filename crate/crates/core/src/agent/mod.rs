//! Concurrency-control actions and the learnable state-to-action function.

mod action;
mod active;
mod encode;
mod function;

pub use action::{Action, DetectionMode, FIFO_PRIORITY, INFINITE_TIMEOUT};
pub use active::ActiveFunction;
pub use encode::{encode_2pl, encode_asocc, encode_occ};
pub use function::{AgentError, AgentFunction};
pub use crate::graph::encode_ic3;

use std::sync::Arc;

use arc_swap::ArcSwap;
use parking_lot::Mutex;

use super::function::AgentFunction;

/// The agent function currently used by new transactions.
///
/// Readers pin an `Arc` at transaction begin and keep it until the
/// transaction ends; replacement is a single pointer swap.
pub struct ActiveFunction {
    current: ArcSwap<AgentFunction>,
    swap_lock: Mutex<()>,
}

impl ActiveFunction {
    pub fn new(mut f: AgentFunction) -> Self {
        f.set_version(1);
        ActiveFunction {
            current: ArcSwap::from_pointee(f),
            swap_lock: Mutex::new(()),
        }
    }

    pub fn pin(&self) -> Arc<AgentFunction> {
        self.current.load_full()
    }

    pub fn version(&self) -> u64 {
        self.current.load().version()
    }

    /// Installs `f` with the next version number; returns the replaced
    /// function's version.
    pub fn swap_active(&self, mut f: AgentFunction) -> u64 {
        let _g = self.swap_lock.lock();
        let prev = self.current.load().version();
        f.set_version(prev + 1);
        self.current.store(Arc::new(f));
        prev
    }
}

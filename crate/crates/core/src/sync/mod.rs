//! Concurrency scaffolding shared by the parallel engines.

mod barrier;
mod fabric;
mod incumbent;

pub use barrier::{BarrierError, DynamicBarrier};
pub use fabric::{Fabric, FabricError, LedgerBalance, WorkerMessage};
pub use incumbent::Incumbent;

/// Index of a worker thread within one search.
pub type WorkerId = usize;

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use super::WorkerId;

const NO_OWNER: usize = usize::MAX;

/// Best goal cost found so far, shared lock-free by every worker.
///
/// The cost is stored as raw `f64` bits and only ever replaced by a strictly
/// smaller value through a compare-and-swap loop.
#[derive(Debug)]
pub struct Incumbent {
    bits: AtomicU64,
    owner: AtomicUsize,
}

impl Default for Incumbent {
    fn default() -> Self {
        Self::new()
    }
}

impl Incumbent {
    pub fn new() -> Self {
        Self {
            bits: AtomicU64::new(f64::INFINITY.to_bits()),
            owner: AtomicUsize::new(NO_OWNER),
        }
    }

    pub fn cost(&self) -> f64 {
        f64::from_bits(self.bits.load(Ordering::SeqCst))
    }

    pub fn is_set(&self) -> bool {
        self.cost().is_finite()
    }

    /// The worker whose improvement landed last. Informational only: it is
    /// written after the cost swap, so a reader may briefly see the previous owner.
    pub fn owner(&self) -> Option<WorkerId> {
        let w = self.owner.load(Ordering::SeqCst);
        (w != NO_OWNER).then_some(w)
    }

    /// Installs `candidate` iff it beats the current cost. Returns whether this call won.
    pub fn try_improve(&self, candidate: f64, worker: WorkerId) -> bool {
        debug_assert!(candidate >= 0.0, "negative incumbent candidate {candidate}");
        let mut current = self.bits.load(Ordering::SeqCst);
        loop {
            if candidate >= f64::from_bits(current) {
                return false;
            }
            match self.bits.compare_exchange_weak(
                current,
                candidate.to_bits(),
                Ordering::SeqCst,
                Ordering::SeqCst,
            ) {
                Ok(_) => {
                    self.owner.store(worker, Ordering::SeqCst);
                    return true;
                }
                Err(actual) => current = actual,
            }
        }
    }
}

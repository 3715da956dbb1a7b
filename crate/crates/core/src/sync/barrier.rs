use std::time::{Duration, Instant};

use parking_lot::{Condvar, Mutex};
use thiserror::Error;

use super::WorkerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BarrierError {
    #[error("worker {0} is not registered with the barrier")]
    NotRegistered(WorkerId),
    #[error("worker {0} already left the barrier")]
    AlreadyLeft(WorkerId),
    #[error("worker {0} is already waiting")]
    AlreadyWaiting(WorkerId),
    #[error("worker {0} timed out at the barrier")]
    TimedOut(WorkerId),
}

#[derive(Debug)]
struct State {
    registered: Vec<bool>,
    arrived: Vec<bool>,
    expected: usize,
    waiting: usize,
    generation: u64,
}

impl State {
    fn release(&mut self) -> u64 {
        self.generation += 1;
        self.waiting = 0;
        self.arrived.iter_mut().for_each(|a| *a = false);
        self.generation
    }
}

/// A barrier whose participant count shrinks as workers leave.
///
/// Unlike [`std::sync::Barrier`], a worker that exits early calls
/// [`leave`](Self::leave) so the rest are not left waiting for it forever.
#[derive(Debug)]
pub struct DynamicBarrier {
    state: Mutex<State>,
    released: Condvar,
}

impl DynamicBarrier {
    /// A barrier with workers `0..workers` registered.
    pub fn new(workers: usize) -> Self {
        Self {
            state: Mutex::new(State {
                registered: vec![true; workers],
                arrived: vec![false; workers],
                expected: workers,
                waiting: 0,
                generation: 0,
            }),
            released: Condvar::new(),
        }
    }

    pub fn expected(&self) -> usize {
        self.state.lock().expected
    }

    pub fn generation(&self) -> u64 {
        self.state.lock().generation
    }

    /// Blocks until every registered worker has arrived or left, then
    /// returns the completed generation number.
    pub fn wait(&self, worker: WorkerId) -> Result<u64, BarrierError> {
        self.wait_inner(worker, None)
    }

    /// As [`wait`](Self::wait), giving up (and withdrawing the arrival) after `timeout`.
    pub fn wait_timeout(&self, worker: WorkerId, timeout: Duration) -> Result<u64, BarrierError> {
        self.wait_inner(worker, Some(Instant::now() + timeout))
    }

    fn wait_inner(&self, worker: WorkerId, deadline: Option<Instant>) -> Result<u64, BarrierError> {
        let mut state = self.state.lock();
        match state.registered.get(worker) {
            Some(true) => {}
            Some(false) => return Err(BarrierError::AlreadyLeft(worker)),
            None => return Err(BarrierError::NotRegistered(worker)),
        }
        if state.arrived[worker] {
            return Err(BarrierError::AlreadyWaiting(worker));
        }
        state.arrived[worker] = true;
        state.waiting += 1;
        if state.waiting == state.expected {
            let generation = state.release();
            self.released.notify_all();
            return Ok(generation);
        }
        let target = state.generation + 1;
        while state.generation < target {
            match deadline {
                None => self.released.wait(&mut state),
                Some(deadline) => {
                    if self.released.wait_until(&mut state, deadline).timed_out()
                        && state.generation < target
                    {
                        state.arrived[worker] = false;
                        state.waiting -= 1;
                        return Err(BarrierError::TimedOut(worker));
                    }
                }
            }
        }
        Ok(target)
    }

    /// Deregisters `worker`, releasing the others if they were only waiting on it.
    pub fn leave(&self, worker: WorkerId) -> Result<(), BarrierError> {
        let mut state = self.state.lock();
        match state.registered.get(worker) {
            Some(true) => {}
            Some(false) => return Err(BarrierError::AlreadyLeft(worker)),
            None => return Err(BarrierError::NotRegistered(worker)),
        }
        if state.arrived[worker] {
            return Err(BarrierError::AlreadyWaiting(worker));
        }
        state.registered[worker] = false;
        state.expected -= 1;
        if state.waiting > 0 && state.waiting == state.expected {
            state.release();
            self.released.notify_all();
        }
        Ok(())
    }
}

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use crossbeam_channel::{unbounded, Receiver, Sender};
use parking_lot::{Mutex, RwLock};
use serde::Serialize;
use thiserror::Error;

use super::WorkerId;
use crate::search::SearchNode;

/// A node handed from one worker to another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerMessage {
    pub node: SearchNode,
    pub sender: WorkerId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FabricError {
    #[error("no live workers remain")]
    NoLiveWorkers,
    #[error("worker {0} is already closed")]
    AlreadyClosed(WorkerId),
    #[error("no worker with id {0}")]
    UnknownWorker(WorkerId),
}

/// Message counts at one observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LedgerBalance {
    pub sent: u64,
    pub received: u64,
    /// Messages still sitting in inboxes.
    pub queued: u64,
}

impl LedgerBalance {
    pub fn is_balanced(&self) -> bool {
        self.sent == self.received && self.queued == 0
    }
}

/// Unbounded per-worker inboxes plus the global termination ledger.
///
/// `sent` is bumped before a message is enqueued and `received` after it is
/// dequeued, so `received <= sent` always holds. Idle workers publish the
/// counts they observed; [`quiescent`](Self::quiescent) holds only when every
/// live worker is idle at the current counts and nothing is in flight.
/// Transfers through other channels (a shared board) are folded in with
/// [`record_outbound`](Self::record_outbound) and
/// [`record_inbound`](Self::record_inbound).
#[derive(Debug)]
pub struct Fabric<T = WorkerMessage> {
    senders: Vec<Sender<T>>,
    receivers: Vec<Receiver<T>>,
    live: RwLock<Vec<bool>>,
    sent: AtomicU64,
    received: AtomicU64,
    idle_reports: Vec<Mutex<Option<(u64, u64)>>>,
}

impl<T> Fabric<T> {
    /// A fabric for `workers` live workers, all initially reported idle.
    pub fn new(workers: usize) -> Self {
        let (senders, receivers) = (0..workers).map(|_| unbounded()).unzip();
        Self {
            senders,
            receivers,
            live: RwLock::new(vec![true; workers]),
            sent: AtomicU64::new(0),
            received: AtomicU64::new(0),
            idle_reports: (0..workers).map(|_| Mutex::new(Some((0, 0)))).collect(),
        }
    }

    pub fn workers(&self) -> usize {
        self.senders.len()
    }

    pub fn is_live(&self, worker: WorkerId) -> bool {
        self.live.read().get(worker).copied().unwrap_or(false)
    }

    pub fn live_workers(&self) -> Vec<WorkerId> {
        let live = self.live.read();
        (0..live.len()).filter(|&w| live[w]).collect()
    }

    /// Enqueues `msg` for `to`, or for the next live worker after it in
    /// cyclic order when `to` has closed. Returns the actual recipient.
    pub fn send(&self, to: WorkerId, msg: T) -> Result<WorkerId, FabricError> {
        let live = self.live.read();
        let n = live.len();
        if to >= n {
            return Err(FabricError::UnknownWorker(to));
        }
        let dest = (0..n)
            .map(|k| (to + k) % n)
            .find(|&w| live[w])
            .ok_or(FabricError::NoLiveWorkers)?;
        self.sent.fetch_add(1, Ordering::SeqCst);
        self.senders[dest]
            .send(msg)
            .expect("fabric owns every receiver");
        Ok(dest)
    }

    /// Non-blocking receive for `worker`.
    pub fn try_recv(&self, worker: WorkerId) -> Option<T> {
        let msg = self.receivers[worker].try_recv().ok()?;
        self.note_dequeued(worker, 1);
        Some(msg)
    }

    /// Receive for `worker`, blocking at most `timeout`.
    pub fn recv_timeout(&self, worker: WorkerId, timeout: Duration) -> Option<T> {
        let msg = self.receivers[worker].recv_timeout(timeout).ok()?;
        self.note_dequeued(worker, 1);
        Some(msg)
    }

    fn note_dequeued(&self, worker: WorkerId, count: u64) {
        *self.idle_reports[worker].lock() = None;
        self.received.fetch_add(count, Ordering::SeqCst);
    }

    pub fn inbox_len(&self, worker: WorkerId) -> usize {
        self.receivers[worker].len()
    }

    /// Removes `worker` from the live set, draining its inbox. Drained
    /// messages count as received; their number is returned.
    pub fn close(&self, worker: WorkerId) -> Result<u64, FabricError> {
        let mut live = self.live.write();
        self.mark_closed(&mut live, worker)?;
        let drained = self.receivers[worker].try_iter().count() as u64;
        self.received.fetch_add(drained, Ordering::SeqCst);
        Ok(drained)
    }

    /// Closes `worker` only if its inbox is empty, atomically with respect to
    /// concurrent senders. Returns whether the worker was closed.
    pub fn close_if_drained(&self, worker: WorkerId) -> Result<bool, FabricError> {
        let mut live = self.live.write();
        if !self.receivers[worker].is_empty() {
            return Ok(false);
        }
        self.mark_closed(&mut live, worker)?;
        Ok(true)
    }

    fn mark_closed(&self, live: &mut [bool], worker: WorkerId) -> Result<(), FabricError> {
        match live.get_mut(worker) {
            None => Err(FabricError::UnknownWorker(worker)),
            Some(false) => Err(FabricError::AlreadyClosed(worker)),
            Some(flag) => {
                *flag = false;
                Ok(())
            }
        }
    }

    /// Counts `count` transfers that left a worker through a side channel.
    /// Must happen before the transferred work becomes visible to others.
    pub fn record_outbound(&self, count: u64) {
        self.sent.fetch_add(count, Ordering::SeqCst);
    }

    /// Counts `count` transfers taken in by `worker` through a side channel.
    pub fn record_inbound(&self, worker: WorkerId, count: u64) {
        self.note_dequeued(worker, count);
    }

    /// Withdraws `worker`'s idle report; it holds work the ledger cannot see.
    pub fn mark_busy(&self, worker: WorkerId) {
        *self.idle_reports[worker].lock() = None;
    }

    /// Publishes that `worker` has no open work and an empty inbox as of now.
    pub fn report_idle(&self, worker: WorkerId) {
        let sent = self.sent.load(Ordering::SeqCst);
        let received = self.received.load(Ordering::SeqCst);
        *self.idle_reports[worker].lock() = Some((sent, received));
    }

    /// True iff nothing is in flight and every live worker has reported idle
    /// at the current counts. The counts are read before and after the
    /// reports; any change in between fails the check.
    pub fn quiescent(&self) -> bool {
        let sent = self.sent.load(Ordering::SeqCst);
        let received = self.received.load(Ordering::SeqCst);
        if sent != received {
            return false;
        }
        {
            let live = self.live.read();
            let all_idle = live
                .iter()
                .zip(&self.idle_reports)
                .filter(|(live, _)| **live)
                .all(|(_, report)| *report.lock() == Some((sent, received)));
            if !all_idle {
                return false;
            }
        }
        self.sent.load(Ordering::SeqCst) == sent && self.received.load(Ordering::SeqCst) == received
    }

    pub fn balance(&self) -> LedgerBalance {
        LedgerBalance {
            sent: self.sent.load(Ordering::SeqCst),
            received: self.received.load(Ordering::SeqCst),
            queued: self.receivers.iter().map(|r| r.len() as u64).sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn send_to_live_worker() {
        let f: Fabric<u32> = Fabric::new(4);
        assert_eq!(f.send(2, 7), Ok(2));
        assert_eq!(f.try_recv(2), Some(7));
        assert_eq!(
            f.balance(),
            LedgerBalance {
                sent: 1,
                received: 1,
                queued: 0
            }
        );
    }

    #[test]
    fn closed_worker_is_rerouted_cyclically() {
        let f: Fabric<u32> = Fabric::new(4);
        f.close(2).unwrap();
        assert_eq!(f.send(2, 1), Ok(3));
        f.close(3).unwrap();
        assert_eq!(f.send(2, 1), Ok(0));
    }

    #[test]
    fn all_closed_is_an_error() {
        let f: Fabric<u32> = Fabric::new(2);
        f.close(0).unwrap();
        f.close(1).unwrap();
        assert!(f.live_workers().is_empty());
        assert_eq!(f.send(0, 1), Err(FabricError::NoLiveWorkers));
        assert_eq!(f.send(9, 1), Err(FabricError::UnknownWorker(9)));
    }

    #[test]
    fn close_empty_inbox() {
        let f: Fabric<u32> = Fabric::new(3);
        assert_eq!(f.close(1), Ok(0));
        assert_eq!(f.live_workers(), vec![0, 2]);
        assert_eq!(f.balance().sent, 0);
        assert_eq!(f.balance().received, 0);
        assert_eq!(f.close(1), Err(FabricError::AlreadyClosed(1)));
    }

    #[test]
    fn close_drains_and_counts() {
        let f: Fabric<u32> = Fabric::new(2);
        for i in 0..5 {
            f.send(1, i).unwrap();
        }
        assert_eq!(f.balance().received, 0);
        assert_eq!(f.close(1), Ok(5));
        assert!(f.balance().is_balanced());
    }

    #[test]
    fn close_if_drained_refuses_pending_inbox() {
        let f: Fabric<u32> = Fabric::new(2);
        f.send(1, 0).unwrap();
        assert_eq!(f.close_if_drained(1), Ok(false));
        assert!(f.is_live(1));
        f.try_recv(1);
        assert_eq!(f.close_if_drained(1), Ok(true));
        assert!(!f.is_live(1));
    }

    #[test]
    fn fresh_fabric_is_quiescent() {
        let f: Fabric<u32> = Fabric::new(3);
        assert!(f.quiescent());
    }

    #[test]
    fn in_flight_message_blocks_quiescence() {
        let f: Fabric<u32> = Fabric::new(2);
        for i in 0..10 {
            f.send(1, i).unwrap();
        }
        for _ in 0..9 {
            f.try_recv(1);
        }
        assert_eq!(f.balance().sent, 10);
        assert_eq!(f.balance().received, 9);
        assert!(!f.quiescent());
    }

    #[test]
    fn busy_worker_blocks_quiescence() {
        let f: Fabric<u32> = Fabric::new(2);
        for i in 0..10 {
            f.send(i as usize % 2, i).unwrap();
        }
        while f.try_recv(0).is_some() {}
        while f.try_recv(1).is_some() {}
        // Counts balance, worker 1 still holds open work.
        f.report_idle(0);
        assert!(!f.quiescent());
        f.report_idle(1);
        assert!(f.quiescent());
        // A stale report no longer matches once counts move.
        f.send(0, 99).unwrap();
        f.try_recv(0);
        f.report_idle(0);
        assert!(!f.quiescent());
        f.report_idle(1);
        assert!(f.quiescent());
    }

    #[test]
    fn closed_workers_are_ignored() {
        let f: Fabric<u32> = Fabric::new(2);
        f.mark_busy(1);
        assert!(!f.quiescent());
        f.close(1).unwrap();
        assert!(f.quiescent());
    }

    #[test]
    fn side_channel_transfers_count() {
        let f: Fabric<u32> = Fabric::new(2);
        f.record_outbound(4);
        assert!(!f.quiescent());
        f.record_inbound(1, 4);
        f.report_idle(1);
        f.report_idle(0);
        assert!(f.quiescent());
    }
}

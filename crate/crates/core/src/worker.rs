//! Plumbing shared by the parallel engines: worker spawning with a watchdog,
//! per-worker open/closed lists, and the idle/termination protocol used by
//! the message-passing engines.

use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use crate::grid::Grid;
use crate::heuristics::HeuristicKind;
use crate::search::{
    open_min_f, reconstruct_path, ClosedMap, OpenEntry, OpenList, SearchError, SearchNode,
    SearchResult,
};
use crate::sync::{DynamicBarrier, Fabric, Incumbent, WorkerId, WorkerMessage};

/// Idle rounds (with an incumbent in hand) before a worker leaves early.
pub(crate) const EARLY_EXIT_IDLE_ROUNDS: u32 = 64;
pub(crate) const DEFAULT_IDLE_WAIT: Duration = Duration::from_micros(500);

#[derive(Debug)]
pub(crate) struct Watchdog {
    started: Instant,
    limit: Duration,
    tripped: AtomicBool,
}

impl Watchdog {
    pub fn new(limit: Duration) -> Self {
        Self {
            started: Instant::now(),
            limit,
            tripped: AtomicBool::new(false),
        }
    }

    pub fn expired(&self) -> bool {
        if self.tripped.load(Ordering::Relaxed) {
            return true;
        }
        if self.started.elapsed() > self.limit {
            self.trip();
            return true;
        }
        false
    }

    pub fn trip(&self) {
        self.tripped.store(true, Ordering::SeqCst);
    }

    pub fn remaining(&self) -> Duration {
        self.limit.saturating_sub(self.started.elapsed())
    }

    pub fn hang(&self) -> SearchError {
        SearchError::Hang(self.limit)
    }

    pub fn started(&self) -> Instant {
        self.started
    }
}

/// Runs `body(id)` on `threads` scoped workers and collects their outputs.
/// A panicking worker trips the watchdog so its peers stop too.
pub(crate) fn run_workers<R, F>(
    threads: usize,
    watchdog: &Watchdog,
    body: F,
) -> Result<Vec<R>, SearchError>
where
    R: Send,
    F: Fn(WorkerId) -> Result<R, SearchError> + Sync,
{
    let outcomes: Vec<Result<R, SearchError>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|id| {
                let body = &body;
                thread::Builder::new()
                    .name(format!("search-worker-{id}"))
                    .spawn_scoped(scope, move || {
                        panic::catch_unwind(AssertUnwindSafe(|| body(id))).unwrap_or_else(|_| {
                            watchdog.trip();
                            Err(SearchError::WorkerPanicked(id))
                        })
                    })
                    .expect("spawn search worker")
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(id, h)| h.join().unwrap_or(Err(SearchError::WorkerPanicked(id))))
            .collect()
    });
    // A panic outranks the hang it causes in the other workers.
    if let Some(i) = outcomes
        .iter()
        .position(|o| matches!(o, Err(SearchError::WorkerPanicked(_))))
    {
        return Err(SearchError::WorkerPanicked(i));
    }
    outcomes.into_iter().collect()
}

/// One worker's private open list and best-g table.
#[derive(Debug)]
pub(crate) struct LocalSearch {
    pub open: OpenList,
    pub closed: ClosedMap,
    pub expanded: u64,
}

impl LocalSearch {
    pub fn new(cells: usize) -> Self {
        Self {
            open: OpenList::new(),
            closed: ClosedMap::new(cells),
            expanded: 0,
        }
    }

    /// Admits a node arriving from elsewhere if it improves the local best g.
    pub fn offer(&mut self, grid: &Grid, node: SearchNode, incumbent: f64) -> bool {
        if node.f >= incumbent {
            return false;
        }
        let index = grid.index(node.position);
        let parent = node.parent.map(|p| grid.index(p));
        if self.closed.try_improve(index, node.g, parent) {
            self.open.push(OpenEntry(node));
            true
        } else {
            false
        }
    }

    /// Pops the best node that is neither stale nor pruned by `incumbent`.
    /// Returns `None` (and empties the list) once nothing below the incumbent remains.
    pub fn pop_live(&mut self, grid: &Grid, incumbent: f64) -> Option<SearchNode> {
        while let Some(OpenEntry(node)) = self.open.pop() {
            if node.f >= incumbent {
                self.open.clear();
                return None;
            }
            if node.g <= self.closed.best(grid.index(node.position)) {
                return Some(node);
            }
        }
        None
    }

    pub fn min_f(&self) -> f64 {
        open_min_f(&self.open)
    }
}

/// State every message-passing worker can see.
pub(crate) struct Cluster<'a> {
    pub grid: &'a Grid,
    pub kind: &'a HeuristicKind,
    pub fabric: Fabric<WorkerMessage>,
    pub incumbent: Incumbent,
    pub barrier: DynamicBarrier,
    pub watchdog: Watchdog,
    pub idle_wait: Duration,
    pub early_exit: bool,
}

pub(crate) enum IdleTurn {
    /// A message arrived while waiting.
    Received(WorkerMessage),
    /// Nothing happened; go round again.
    Retry,
    /// This worker has closed its inbox and left the barrier.
    Finished,
}

impl<'a> Cluster<'a> {
    pub fn new(
        grid: &'a Grid,
        kind: &'a HeuristicKind,
        threads: usize,
        timeout: Duration,
        idle_wait: Duration,
        early_exit: bool,
    ) -> Self {
        Self {
            grid,
            kind,
            fabric: Fabric::new(threads),
            incumbent: Incumbent::new(),
            barrier: DynamicBarrier::new(threads),
            watchdog: Watchdog::new(timeout),
            idle_wait,
            early_exit,
        }
    }

    /// Called when worker `id` has no open work and an empty inbox.
    ///
    /// Termination is declared only when the ledger is quiescent both before
    /// and after a barrier shared by all remaining workers. Separately, a
    /// worker that has been idle for a while after a goal was found may
    /// leave early; its inbox closes atomically with the emptiness check so
    /// later traffic reroutes to live peers.
    pub fn idle_turn(&self, id: WorkerId, idle_rounds: &mut u32) -> Result<IdleTurn, SearchError> {
        self.fabric.report_idle(id);
        if self.fabric.quiescent() {
            self.barrier
                .wait_timeout(id, self.watchdog.remaining())
                .map_err(|_| {
                    self.watchdog.trip();
                    self.watchdog.hang()
                })?;
            if self.fabric.quiescent() {
                self.depart(id)?;
                return Ok(IdleTurn::Finished);
            }
        }
        *idle_rounds += 1;
        if self.early_exit
            && *idle_rounds >= EARLY_EXIT_IDLE_ROUNDS
            && self.incumbent.is_set()
            && self.fabric.close_if_drained(id)?
        {
            self.barrier
                .leave(id)
                .map_err(|source| SearchError::Barrier { worker: id, source })?;
            return Ok(IdleTurn::Finished);
        }
        Ok(match self.fabric.recv_timeout(id, self.idle_wait) {
            Some(msg) => {
                *idle_rounds = 0;
                IdleTurn::Received(msg)
            }
            None => IdleTurn::Retry,
        })
    }

    fn depart(&self, id: WorkerId) -> Result<(), SearchError> {
        self.fabric.close(id)?;
        self.barrier
            .leave(id)
            .map_err(|source| SearchError::Barrier { worker: id, source })
    }

    /// Assembles the result once every worker has joined.
    pub fn finish(&self, locals: &[LocalSearch]) -> Result<SearchResult, SearchError> {
        let balance = self.fabric.balance();
        if !balance.is_balanced() {
            return Err(SearchError::Unbalanced(balance));
        }
        let path = self
            .incumbent
            .is_set()
            .then(|| reconstruct_path(self.grid, |i| best_entry(locals, i)))
            .flatten();
        let expanded = locals.iter().map(|l| l.expanded).sum();
        let mut result =
            SearchResult::from_path(path, expanded, self.watchdog.started().elapsed());
        result.ledger = Some(balance);
        Ok(result)
    }
}

/// Lowest-g record for a cell across all workers.
pub(crate) fn best_entry(locals: &[LocalSearch], index: usize) -> Option<(f64, Option<usize>)> {
    locals
        .iter()
        .filter_map(|l| l.closed.entry(index))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

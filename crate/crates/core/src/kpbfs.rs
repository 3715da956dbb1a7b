//! K-parallel best-first search: every worker pulls from one shared open list
//! and records into one shared closed map, each behind its own lock.
//!
//! Workers take `batch` nodes per lock acquisition, so `threads * batch`
//! nodes are in expansion at once. A popped batch stays "in flight" until its
//! successors are pushed; the search ends when the open list is empty and no
//! batch is in flight. Goal pops only tighten the shared incumbent, which
//! prunes everything with `f >= incumbent`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use parking_lot::{Condvar, Mutex};

use crate::grid::Grid;
use crate::heuristics::HeuristicKind;
use crate::search::{
    reconstruct_path, ClosedMap, OpenEntry, OpenList, SearchError, SearchNode, SearchResult,
    DEFAULT_WATCHDOG,
};
use crate::sync::Incumbent;
use crate::worker::{run_workers, Watchdog};

const WAIT_SLICE: Duration = Duration::from_millis(10);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpbfsConfig {
    pub threads: usize,
    /// Nodes popped per open-list acquisition.
    pub batch: usize,
    pub timeout: Duration,
}

impl KpbfsConfig {
    pub fn new(threads: usize) -> Self {
        Self {
            threads,
            batch: 1,
            timeout: DEFAULT_WATCHDOG,
        }
    }
}

#[derive(Debug, Default)]
struct OpenState {
    heap: OpenList,
    in_flight: usize,
    done: bool,
}

/// The shared open list and closed map.
#[derive(Debug)]
pub struct SharedFrontier {
    open: Mutex<OpenState>,
    closed: Mutex<ClosedMap>,
    changed: Condvar,
    pushes: AtomicU64,
    pops: AtomicU64,
}

/// Push/pop totals, for checking that no node went missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrontierStats {
    pub pushes: u64,
    pub pops: u64,
    pub residual: u64,
}

impl SharedFrontier {
    pub fn new(grid: &Grid) -> Self {
        Self {
            open: Mutex::new(OpenState::default()),
            closed: Mutex::new(ClosedMap::new(grid.cell_count())),
            changed: Condvar::new(),
            pushes: AtomicU64::new(0),
            pops: AtomicU64::new(0),
        }
    }

    /// Records `node` in the closed map if it improves the best g for its
    /// cell, then pushes it. Returns whether it was admitted.
    pub fn seed(&self, grid: &Grid, node: SearchNode) -> bool {
        let parent = node.parent.map(|p| grid.index(p));
        if !self
            .closed
            .lock()
            .try_improve(grid.index(node.position), node.g, parent)
        {
            return false;
        }
        self.push_all(std::iter::once(node));
        true
    }

    fn push_all(&self, nodes: impl IntoIterator<Item = SearchNode>) {
        let mut open = self.open.lock();
        for node in nodes {
            open.heap.push(OpenEntry(node));
            self.pushes.fetch_add(1, Ordering::Relaxed);
        }
        self.changed.notify_all();
    }

    pub fn stats(&self) -> FrontierStats {
        FrontierStats {
            pushes: self.pushes.load(Ordering::SeqCst),
            pops: self.pops.load(Ordering::SeqCst),
            residual: self.open.lock().heap.len() as u64,
        }
    }

    pub fn open_len(&self) -> usize {
        self.open.lock().heap.len()
    }

    fn pop_batch(&self, open: &mut OpenState, grid: &Grid, k: usize) -> Vec<SearchNode> {
        let closed = self.closed.lock();
        let mut batch = Vec::with_capacity(k);
        while batch.len() < k {
            let Some(OpenEntry(node)) = open.heap.pop() else {
                break;
            };
            self.pops.fetch_add(1, Ordering::Relaxed);
            if node.g <= closed.best(grid.index(node.position)) {
                batch.push(node);
            }
        }
        batch
    }
}

/// Pops up to `k` non-stale best nodes under a single open-list acquisition.
pub fn kpbfs_expand_batch(frontier: &SharedFrontier, grid: &Grid, k: usize) -> Vec<SearchNode> {
    let mut open = frontier.open.lock();
    frontier.pop_batch(&mut open, grid, k)
}

pub fn kpbfs_search(
    grid: &Grid,
    kind: &HeuristicKind,
    threads: usize,
) -> Result<SearchResult, SearchError> {
    kpbfs_search_with(grid, kind, &KpbfsConfig::new(threads)).map(|(r, _)| r)
}

pub fn kpbfs_search_with(
    grid: &Grid,
    kind: &HeuristicKind,
    config: &KpbfsConfig,
) -> Result<(SearchResult, FrontierStats), SearchError> {
    if config.threads == 0 {
        return Err(SearchError::NoThreads);
    }
    if config.batch == 0 {
        return Err(SearchError::ZeroBatch);
    }
    let watchdog = Watchdog::new(config.timeout);
    let frontier = SharedFrontier::new(grid);
    let incumbent = Incumbent::new();
    let goal = grid.end();
    frontier.seed(
        grid,
        SearchNode::new(grid.start(), 0.0, kind.evaluate(grid.start(), goal), None),
    );

    let expanded = run_workers(config.threads, &watchdog, |id| {
        let mut expanded = 0u64;
        let mut accepted = Vec::with_capacity(4);
        let mut successors = Vec::with_capacity(4 * config.batch);
        loop {
            let batch = {
                let mut open = frontier.open.lock();
                loop {
                    if open.done {
                        return Ok(expanded);
                    }
                    if watchdog.expired() {
                        open.done = true;
                        frontier.changed.notify_all();
                        return Err(watchdog.hang());
                    }
                    if !open.heap.is_empty() {
                        let batch = frontier.pop_batch(&mut open, grid, config.batch);
                        if !batch.is_empty() {
                            open.in_flight += 1;
                            break batch;
                        }
                    } else if open.in_flight == 0 {
                        open.done = true;
                        frontier.changed.notify_all();
                        return Ok(expanded);
                    } else {
                        frontier.changed.wait_for(&mut open, WAIT_SLICE);
                    }
                }
            };

            successors.clear();
            for node in batch {
                let bound = incumbent.cost();
                if node.f >= bound {
                    continue;
                }
                expanded += 1;
                if node.position == goal {
                    incumbent.try_improve(node.g, id);
                    continue;
                }
                let g = node.g + 1.0;
                if g >= bound {
                    continue;
                }
                let parent = grid.index(node.position);
                accepted.clear();
                {
                    let mut closed = frontier.closed.lock();
                    accepted.extend(
                        grid.neighbors_unchecked(node.position)
                            .into_iter()
                            .filter(|&q| closed.try_improve(grid.index(q), g, Some(parent))),
                    );
                }
                successors.extend(accepted.iter().map(|&q| {
                    SearchNode::new(q, g, kind.evaluate(q, goal), Some(node.position))
                }));
            }

            let bound = incumbent.cost();
            let mut open = frontier.open.lock();
            for node in successors.drain(..).filter(|n| n.f < bound) {
                open.heap.push(OpenEntry(node));
                frontier.pushes.fetch_add(1, Ordering::Relaxed);
            }
            open.in_flight -= 1;
            frontier.changed.notify_all();
        }
    })?;

    let path = incumbent
        .is_set()
        .then(|| {
            let closed = frontier.closed.lock();
            reconstruct_path(grid, |i| closed.entry(i))
        })
        .flatten();
    let result = SearchResult::from_path(path, expanded.iter().sum(), watchdog.started().elapsed());
    Ok((result, frontier.stats()))
}

//! Decentralized parallel A*: every worker runs its own A* over private
//! open/closed lists and hands nodes to its peers, either by routing each
//! successor to a pseudo-random worker or through a shared blackboard.
//!
//! Duplicate detection is local only, so the same cell may be expanded by
//! several workers. Worker 0 seeds the start node.

use std::time::Duration;

use parking_lot::Mutex;

use crate::grid::Grid;
use crate::heuristics::HeuristicKind;
use crate::mix;
use crate::search::{open_min_f, OpenEntry, OpenList, SearchError, SearchNode, SearchResult, DEFAULT_WATCHDOG};
use crate::sync::{Fabric, WorkerId, WorkerMessage};
use crate::worker::{run_workers, Cluster, IdleTurn, LocalSearch, DEFAULT_IDLE_WAIT};

pub const DEFAULT_BLACKBOARD_THRESHOLD: f64 = 5.0;
pub const DEFAULT_BLACKBOARD_BATCH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionStrategy {
    /// Each successor goes to a worker drawn from `(seed, step)`.
    Random { seed: u64 },
    /// Successors stay local; workers trade their best nodes through a shared board.
    Blackboard { threshold: f64, batch: usize },
}

impl DistributionStrategy {
    pub fn random(seed: u64) -> Self {
        Self::Random { seed }
    }

    pub fn blackboard() -> Self {
        Self::Blackboard {
            threshold: DEFAULT_BLACKBOARD_THRESHOLD,
            batch: DEFAULT_BLACKBOARD_BATCH,
        }
    }

    fn validate(&self) -> Result<(), SearchError> {
        match *self {
            Self::Blackboard { batch: 0, .. } => Err(SearchError::ZeroBatch),
            Self::Blackboard { threshold, .. } if threshold.is_nan() || threshold <= 0.0 => {
                Err(SearchError::BadThreshold(threshold))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpaConfig {
    pub threads: usize,
    pub strategy: DistributionStrategy,
    pub timeout: Duration,
    /// How long an idle worker blocks on its inbox before re-checking.
    pub idle_wait: Duration,
    /// Let workers leave once idle after a goal is known.
    pub early_exit: bool,
}

impl DpaConfig {
    pub fn new(threads: usize, strategy: DistributionStrategy) -> Self {
        Self {
            threads,
            strategy,
            timeout: DEFAULT_WATCHDOG,
            idle_wait: DEFAULT_IDLE_WAIT,
            early_exit: true,
        }
    }
}

/// Deterministic worker choice for the `step`-th routed successor.
pub fn random_route(seed: u64, step: u64, threads: usize) -> WorkerId {
    (mix::hash_words(seed, &[step]) % threads as u64) as WorkerId
}

/// Shared pool of nodes, best first.
#[derive(Debug, Default)]
pub struct Blackboard {
    board: Mutex<OpenList>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exchange {
    None,
    Donated(usize),
    Took(usize),
}

impl Blackboard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.board.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_f(&self) -> f64 {
        open_min_f(&self.board.lock())
    }
}

/// A DPA* worker's private state. Received nodes pass through `buffer`
/// before the closed-list check admits them to `open`.
#[derive(Debug)]
pub struct DpaWorkerState {
    id: WorkerId,
    search: LocalSearch,
    buffer: Vec<SearchNode>,
    route_step: u64,
}

impl DpaWorkerState {
    pub fn new(id: WorkerId, grid: &Grid) -> Self {
        Self {
            id,
            search: LocalSearch::new(grid.cell_count()),
            buffer: Vec::new(),
            route_step: 0,
        }
    }

    pub fn id(&self) -> WorkerId {
        self.id
    }

    pub fn open_len(&self) -> usize {
        self.search.open.len()
    }

    pub fn open_min_f(&self) -> f64 {
        self.search.min_f()
    }

    /// Puts a node straight into the open list, bypassing the closed check.
    pub fn push_open(&mut self, node: SearchNode) {
        self.search.open.push(OpenEntry(node));
    }
}

/// Trades nodes between `worker`'s open list and the board.
///
/// With `l` the worker's best f and `b` the board's (`+inf` when empty): if
/// `l + threshold < b` the worker donates its `batch` best nodes; if
/// `l > b + threshold` it takes the board's `batch` best. Donations count as
/// sent and takes as received on `fabric`, so termination sees board contents.
pub fn blackboard_exchange(
    worker: &mut DpaWorkerState,
    board: &Blackboard,
    threshold: f64,
    batch: usize,
    grid: &Grid,
    fabric: &Fabric<WorkerMessage>,
) -> Exchange {
    let mut pool = board.board.lock();
    let local = worker.search.min_f();
    let shared = open_min_f(&pool);
    if local + threshold < shared {
        let mut moved = 0;
        while moved < batch {
            let Some(entry) = worker.search.open.pop() else {
                break;
            };
            if entry.0.g > worker.search.closed.best(grid.index(entry.0.position)) {
                continue;
            }
            fabric.record_outbound(1);
            pool.push(entry);
            moved += 1;
        }
        Exchange::Donated(moved)
    } else if local > shared + threshold {
        let take = batch.min(pool.len());
        fabric.record_inbound(worker.id, take as u64);
        for _ in 0..take {
            let OpenEntry(node) = pool.pop().expect("counted above");
            // Equal g is admitted: this may be one of our own donations coming back.
            let index = grid.index(node.position);
            if node.g <= worker.search.closed.best(index) {
                worker
                    .search
                    .closed
                    .try_improve(index, node.g, node.parent.map(|p| grid.index(p)));
                worker.search.open.push(OpenEntry(node));
            }
        }
        Exchange::Took(take)
    } else {
        Exchange::None
    }
}

pub fn dpa_search(
    grid: &Grid,
    kind: &HeuristicKind,
    threads: usize,
    strategy: DistributionStrategy,
) -> Result<SearchResult, SearchError> {
    dpa_search_with(grid, kind, &DpaConfig::new(threads, strategy))
}

pub fn dpa_search_with(
    grid: &Grid,
    kind: &HeuristicKind,
    config: &DpaConfig,
) -> Result<SearchResult, SearchError> {
    if config.threads == 0 {
        return Err(SearchError::NoThreads);
    }
    config.strategy.validate()?;
    let cluster = Cluster::new(
        grid,
        kind,
        config.threads,
        config.timeout,
        config.idle_wait,
        config.early_exit,
    );
    let board = Blackboard::new();
    cluster.fabric.mark_busy(0);
    let locals = run_workers(config.threads, &cluster.watchdog, |id| {
        let mut worker = DpaWorkerState::new(id, grid);
        if id == 0 {
            let start = grid.start();
            let h = kind.evaluate(start, grid.end());
            worker.buffer.push(SearchNode::new(start, 0.0, h, None));
        }
        run_dpa_worker(&cluster, &board, config, &mut worker)?;
        Ok(worker.search)
    })?;
    cluster.finish(&locals)
}

fn run_dpa_worker(
    cluster: &Cluster<'_>,
    board: &Blackboard,
    config: &DpaConfig,
    worker: &mut DpaWorkerState,
) -> Result<(), SearchError> {
    let mut idle_rounds = 0;
    loop {
        if cluster.watchdog.expired() {
            return Err(cluster.watchdog.hang());
        }
        if dpa_step(cluster, board, config, worker)? {
            idle_rounds = 0;
            continue;
        }
        match cluster.idle_turn(worker.id, &mut idle_rounds)? {
            IdleTurn::Received(msg) => worker.buffer.push(msg.node),
            IdleTurn::Retry => {}
            IdleTurn::Finished => return Ok(()),
        }
    }
}

/// One pass of the worker loop: drain the inbox into the buffer, admit the
/// buffer, trade with the board, then expand the best node. Returns false
/// when there was nothing to expand.
fn dpa_step(
    cluster: &Cluster<'_>,
    board: &Blackboard,
    config: &DpaConfig,
    worker: &mut DpaWorkerState,
) -> Result<bool, SearchError> {
    let grid = cluster.grid;
    while let Some(msg) = cluster.fabric.try_recv(worker.id) {
        worker.buffer.push(msg.node);
    }
    let bound = cluster.incumbent.cost();
    for node in worker.buffer.drain(..) {
        worker.search.offer(grid, node, bound);
    }
    if let DistributionStrategy::Blackboard { threshold, batch } = config.strategy {
        blackboard_exchange(worker, board, threshold, batch, grid, &cluster.fabric);
    }

    let bound = cluster.incumbent.cost();
    let mut popped = worker.search.pop_live(grid, bound);
    if popped.is_none() {
        // A donation may have emptied the open list; pull back before idling.
        if let DistributionStrategy::Blackboard { threshold, batch } = config.strategy {
            if let Exchange::Took(_) =
                blackboard_exchange(worker, board, threshold, batch, grid, &cluster.fabric)
            {
                popped = worker.search.pop_live(grid, bound);
            }
        }
    }
    let Some(node) = popped else {
        return Ok(false);
    };
    worker.search.expanded += 1;
    let goal = grid.end();
    if node.position == goal {
        cluster.incumbent.try_improve(node.g, worker.id);
        return Ok(true);
    }
    let g = node.g + 1.0;
    if g >= bound {
        return Ok(true);
    }
    let parent = grid.index(node.position);
    for q in grid.neighbors_unchecked(node.position) {
        if !worker.search.closed.try_improve(grid.index(q), g, Some(parent)) {
            continue;
        }
        let child = SearchNode::new(q, g, cluster.kind.evaluate(q, goal), Some(node.position));
        if child.f >= bound {
            continue;
        }
        let dest = match config.strategy {
            DistributionStrategy::Random { seed } => {
                let step = worker.route_step * config.threads as u64 + worker.id as u64;
                worker.route_step += 1;
                random_route(seed, step, config.threads)
            }
            DistributionStrategy::Blackboard { .. } => worker.id,
        };
        if dest == worker.id {
            worker.push_open(child);
        } else {
            cluster.fabric.send(
                dest,
                WorkerMessage {
                    node: child,
                    sender: worker.id,
                },
            )?;
        }
    }
    Ok(true)
}

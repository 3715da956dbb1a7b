//! Node and result types shared by every engine, the sequential A* baseline
//! and the breadth-first oracle.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::grid::{Grid, Position};
use crate::heuristics::HeuristicKind;
use crate::sync::{FabricError, LedgerBalance};

/// Default watchdog for the parallel engines.
pub const DEFAULT_WATCHDOG: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("thread count must be at least 1")]
    NoThreads,
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("blackboard threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error("search did not terminate within {0:?}")]
    Hang(Duration),
    #[error("worker {0} panicked")]
    WorkerPanicked(usize),
    #[error(transparent)]
    Fabric(#[from] FabricError),
    #[error("worker {worker} hit a barrier error: {source}")]
    Barrier {
        worker: usize,
        source: crate::sync::BarrierError,
    },
    #[error("message ledger out of balance at join: {0:?}")]
    Unbalanced(LedgerBalance),
}

/// A frontier entry. `f` is always stored as `g + h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchNode {
    pub position: Position,
    pub g: f64,
    pub h: f64,
    pub f: f64,
    pub parent: Option<Position>,
}

impl SearchNode {
    pub fn new(position: Position, g: f64, h: f64, parent: Option<Position>) -> Self {
        Self {
            position,
            g,
            h,
            f: g + h,
            parent,
        }
    }

    /// Frontier order: lower f first, then higher g, then row-major position.
    pub fn priority_cmp(&self, other: &Self) -> Ordering {
        self.f
            .total_cmp(&other.f)
            .then_with(|| other.g.total_cmp(&self.g))
            .then_with(|| {
                (self.position.y, self.position.x).cmp(&(other.position.y, other.position.x))
            })
    }
}

/// Max-heap adaptor putting the best node (per [`SearchNode::priority_cmp`]) on top.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OpenEntry(pub SearchNode);

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.priority_cmp(&self.0)
    }
}

pub(crate) type OpenList = BinaryHeap<OpenEntry>;

pub(crate) fn open_min_f(open: &OpenList) -> f64 {
    open.peek().map_or(f64::INFINITY, |e| e.0.f)
}

const NO_PARENT: u32 = u32::MAX;

/// Dense best-known-g table with parent links, indexed row-major.
#[derive(Debug, Clone)]
pub(crate) struct ClosedMap {
    g: Vec<f64>,
    parent: Vec<u32>,
}

impl ClosedMap {
    pub fn new(cells: usize) -> Self {
        Self {
            g: vec![f64::INFINITY; cells],
            parent: vec![NO_PARENT; cells],
        }
    }

    #[inline]
    pub fn best(&self, index: usize) -> f64 {
        self.g[index]
    }

    /// Records `g` for `index` iff it is strictly better than what is known.
    #[inline]
    pub fn try_improve(&mut self, index: usize, g: f64, parent: Option<usize>) -> bool {
        if g < self.g[index] {
            self.g[index] = g;
            self.parent[index] = parent.map_or(NO_PARENT, |p| p as u32);
            true
        } else {
            false
        }
    }

    #[inline]
    pub fn entry(&self, index: usize) -> Option<(f64, Option<usize>)> {
        let g = self.g[index];
        g.is_finite().then(|| {
            let p = self.parent[index];
            (g, (p != NO_PARENT).then_some(p as usize))
        })
    }
}

/// Walks parent links back from the end cell.
///
/// `lookup` yields the best `(g, parent)` known for a cell. Parent links
/// strictly decrease g, so the walk always ends at the start.
pub(crate) fn reconstruct_path(
    grid: &Grid,
    lookup: impl Fn(usize) -> Option<(f64, Option<usize>)>,
) -> Option<Vec<Position>> {
    let mut index = grid.index(grid.end());
    let mut path = vec![grid.end()];
    loop {
        let (_, parent) = lookup(index)?;
        match parent {
            Some(p) => {
                index = p;
                path.push(grid.position(p));
                if path.len() > grid.cell_count() {
                    return None;
                }
            }
            None => break,
        }
    }
    path.reverse();
    (path[0] == grid.start()).then_some(path)
}

/// Ledger counts of a message-passing run.
pub type LedgerSnapshot = LedgerBalance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    /// Path cost, `None` when the end is unreachable.
    pub cost: Option<f64>,
    pub path: Vec<Position>,
    pub nodes_expanded: u64,
    pub elapsed: Duration,
    /// Inter-worker message accounting, for engines that pass messages.
    pub ledger: Option<LedgerSnapshot>,
}

impl SearchResult {
    pub(crate) fn from_path(
        path: Option<Vec<Position>>,
        nodes_expanded: u64,
        elapsed: Duration,
    ) -> Self {
        let path = path.unwrap_or_default();
        Self {
            cost: (!path.is_empty()).then(|| (path.len() - 1) as f64),
            path,
            nodes_expanded,
            elapsed,
            ledger: None,
        }
    }

    pub fn is_reachable(&self) -> bool {
        self.cost.is_some()
    }

    /// Equality on everything except wall-clock time.
    pub fn same_outcome(&self, other: &SearchResult) -> bool {
        self.cost == other.cost
            && self.path == other.path
            && self.nodes_expanded == other.nodes_expanded
    }
}

/// Classic single-threaded A*, stopping at the first goal pop.
pub fn astar_sequential(grid: &Grid, kind: &HeuristicKind) -> SearchResult {
    let started = Instant::now();
    let goal = grid.end();
    let goal_index = grid.index(goal);
    let mut closed = ClosedMap::new(grid.cell_count());
    let mut open = OpenList::new();
    let start = grid.start();
    closed.try_improve(grid.index(start), 0.0, None);
    open.push(OpenEntry(SearchNode::new(
        start,
        0.0,
        kind.evaluate(start, goal),
        None,
    )));
    let mut expanded = 0u64;
    let mut found = false;
    while let Some(OpenEntry(node)) = open.pop() {
        let index = grid.index(node.position);
        if node.g > closed.best(index) {
            continue;
        }
        expanded += 1;
        if index == goal_index {
            found = true;
            break;
        }
        let g = node.g + 1.0;
        for q in grid.neighbors_unchecked(node.position) {
            if closed.try_improve(grid.index(q), g, Some(index)) {
                let h = kind.evaluate(q, goal);
                open.push(OpenEntry(SearchNode::new(q, g, h, Some(node.position))));
            }
        }
    }
    let path = found
        .then(|| reconstruct_path(grid, |i| closed.entry(i)))
        .flatten();
    SearchResult::from_path(path, expanded, started.elapsed())
}

/// Breadth-first shortest path; exact on unit-cost grids and independent of
/// the heuristic machinery.
pub fn dijkstra_oracle(grid: &Grid) -> SearchResult {
    let started = Instant::now();
    let cells = grid.cell_count();
    let mut parent = vec![usize::MAX; cells];
    let mut seen = vec![false; cells];
    let start = grid.index(grid.start());
    let end = grid.index(grid.end());
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut expanded = 0u64;
    let mut reached = false;
    while let Some(i) = queue.pop_front() {
        expanded += 1;
        if i == end {
            reached = true;
            break;
        }
        for q in grid.neighbors_unchecked(grid.position(i)) {
            let j = grid.index(q);
            if !seen[j] {
                seen[j] = true;
                parent[j] = i;
                queue.push_back(j);
            }
        }
    }
    let path = reached.then(|| {
        let mut path = vec![grid.end()];
        let mut i = end;
        while i != start {
            i = parent[i];
            path.push(grid.position(i));
        }
        path.reverse();
        path
    });
    SearchResult::from_path(path, expanded, started.elapsed())
}

/// Checks the path invariants of `result` against `grid`.
pub fn validate_path(grid: &Grid, result: &SearchResult) -> bool {
    let Some(cost) = result.cost else {
        return result.path.is_empty();
    };
    let path = &result.path;
    let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
        return false;
    };
    if first != grid.start() || last != grid.end() {
        return false;
    }
    if cost != (path.len() - 1) as f64 {
        return false;
    }
    if path.iter().any(|&p| !grid.contains(p) || grid.is_wall(p)) {
        return false;
    }
    path.windows(2)
        .all(|w| w[0].x.abs_diff(w[1].x) + w[0].y.abs_diff(w[1].y) == 1)
}

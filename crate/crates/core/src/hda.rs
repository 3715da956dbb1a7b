//! Hash-distributed A*: each cell belongs to exactly one worker, picked by
//! hashing its coordinates. Successors are mailed to their owners, and a
//! worker always empties its inbox before expanding anything.

use std::time::Duration;

use crate::grid::{Grid, Position};
use crate::heuristics::HeuristicKind;
use crate::mix;
use crate::search::{OpenEntry, SearchError, SearchNode, SearchResult, DEFAULT_WATCHDOG};
use crate::sync::{WorkerId, WorkerMessage};
use crate::worker::{run_workers, Cluster, IdleTurn, LocalSearch, DEFAULT_IDLE_WAIT};

/// Odd multipliers for the x and y coordinates before finalizing.
pub const OWNER_MULTIPLIERS: (u64, u64) = (0x9E37_79B9_7F4A_7C15, 0xC2B2_AE3D_27D4_EB4F);

/// Maps cells to owning workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OwnerHash {
    multipliers: (u64, u64),
    threads: usize,
}

impl OwnerHash {
    pub fn new(threads: usize) -> Self {
        assert!(threads > 0, "owner hash over zero workers");
        Self {
            multipliers: OWNER_MULTIPLIERS,
            threads,
        }
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    #[inline]
    pub fn owner(&self, p: Position) -> WorkerId {
        let key = (p.x as u64)
            .wrapping_mul(self.multipliers.0)
            .wrapping_add((p.y as u64).wrapping_mul(self.multipliers.1));
        (mix::finalize(key) % self.threads as u64) as WorkerId
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HdaConfig {
    pub threads: usize,
    pub timeout: Duration,
    pub idle_wait: Duration,
    pub early_exit: bool,
}

impl HdaConfig {
    pub fn new(threads: usize) -> Self {
        Self {
            threads,
            timeout: DEFAULT_WATCHDOG,
            idle_wait: DEFAULT_IDLE_WAIT,
            early_exit: true,
        }
    }
}

/// What one pass of [`HdaWorker::step`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// Took `n` messages from the inbox and expanded nothing.
    Absorbed(usize),
    Expanded,
    Idle,
}

#[derive(Debug)]
pub struct HdaWorker {
    id: WorkerId,
    hash: OwnerHash,
    search: LocalSearch,
}

impl HdaWorker {
    fn new(id: WorkerId, grid: &Grid, hash: OwnerHash) -> Self {
        Self {
            id,
            hash,
            search: LocalSearch::new(grid.cell_count()),
        }
    }

    pub fn expanded(&self) -> u64 {
        self.search.expanded
    }

    pub fn open_len(&self) -> usize {
        self.search.open.len()
    }

    fn admit(&mut self, cluster: &Cluster<'_>, node: SearchNode) {
        debug_assert!(
            {
                let owner = self.hash.owner(node.position);
                owner == self.id || !cluster.fabric.is_live(owner)
            },
            "worker {} admitted {} owned by a live peer",
            self.id,
            node.position
        );
        self.search
            .offer(cluster.grid, node, cluster.incumbent.cost());
    }

    /// Messages first: if anything was waiting, absorb it all and return.
    /// Only an empty inbox lets the worker expand its best open node.
    pub(crate) fn step(&mut self, cluster: &Cluster<'_>) -> Result<Step, SearchError> {
        let mut absorbed = 0;
        while let Some(msg) = cluster.fabric.try_recv(self.id) {
            self.admit(cluster, msg.node);
            absorbed += 1;
        }
        if absorbed > 0 {
            return Ok(Step::Absorbed(absorbed));
        }

        let grid = cluster.grid;
        let bound = cluster.incumbent.cost();
        let Some(node) = self.search.pop_live(grid, bound) else {
            return Ok(Step::Idle);
        };
        self.search.expanded += 1;
        let goal = grid.end();
        if node.position == goal {
            cluster.incumbent.try_improve(node.g, self.id);
            return Ok(Step::Expanded);
        }
        let g = node.g + 1.0;
        if g >= bound {
            return Ok(Step::Expanded);
        }
        let parent = grid.index(node.position);
        for q in grid.neighbors_unchecked(node.position) {
            let owner = self.hash.owner(q);
            if owner == self.id {
                if self.search.closed.try_improve(grid.index(q), g, Some(parent)) {
                    let child =
                        SearchNode::new(q, g, cluster.kind.evaluate(q, goal), Some(node.position));
                    if child.f < bound {
                        self.search.open.push(OpenEntry(child));
                    }
                }
            } else {
                let child =
                    SearchNode::new(q, g, cluster.kind.evaluate(q, goal), Some(node.position));
                if child.f < bound {
                    cluster.fabric.send(
                        owner,
                        WorkerMessage {
                            node: child,
                            sender: self.id,
                        },
                    )?;
                }
            }
        }
        Ok(Step::Expanded)
    }
}

pub fn hda_search(
    grid: &Grid,
    kind: &HeuristicKind,
    threads: usize,
) -> Result<SearchResult, SearchError> {
    hda_search_with(grid, kind, &HdaConfig::new(threads))
}

pub fn hda_search_with(
    grid: &Grid,
    kind: &HeuristicKind,
    config: &HdaConfig,
) -> Result<SearchResult, SearchError> {
    if config.threads == 0 {
        return Err(SearchError::NoThreads);
    }
    let cluster = Cluster::new(
        grid,
        kind,
        config.threads,
        config.timeout,
        config.idle_wait,
        config.early_exit,
    );
    let hash = OwnerHash::new(config.threads);
    let start = grid.start();
    let start_owner = hash.owner(start);
    cluster.fabric.mark_busy(start_owner);
    let locals = run_workers(config.threads, &cluster.watchdog, |id| {
        let mut worker = HdaWorker::new(id, grid, hash);
        if id == start_owner {
            let h = kind.evaluate(start, grid.end());
            worker.admit(&cluster, SearchNode::new(start, 0.0, h, None));
        }
        let mut idle_rounds = 0;
        loop {
            if cluster.watchdog.expired() {
                return Err(cluster.watchdog.hang());
            }
            if worker.step(&cluster)? != Step::Idle {
                idle_rounds = 0;
                continue;
            }
            match cluster.idle_turn(id, &mut idle_rounds)? {
                IdleTurn::Received(msg) => worker.admit(&cluster, msg.node),
                IdleTurn::Retry => {}
                IdleTurn::Finished => return Ok(worker.search),
            }
        }
    })?;
    cluster.finish(&locals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{dijkstra_oracle, validate_path};

    #[test]
    fn one_thread_owns_everything() {
        let h = OwnerHash::new(1);
        assert!((0..50).all(|i| h.owner(Position::new(i, 2 * i)) == 0));
    }

    #[test]
    fn owner_is_pure() {
        let h = OwnerHash::new(7);
        let p = Position::new(123, 456);
        assert_eq!(h.owner(p), h.owner(p));
        assert_eq!(OwnerHash::new(7).owner(p), h.owner(p));
    }

    #[test]
    fn owners_in_range() {
        for threads in 1..=16 {
            let h = OwnerHash::new(threads);
            for x in 0..40 {
                for y in 0..40 {
                    assert!(h.owner(Position::new(x, y)) < threads);
                }
            }
        }
    }

    #[test]
    fn messages_before_expansion() {
        let grid = Grid::generate(12, 0.0, 2).unwrap();
        let kind = HeuristicKind::manhattan();
        let cluster = Cluster::new(
            &grid,
            &kind,
            2,
            Duration::from_secs(5),
            DEFAULT_IDLE_WAIT,
            false,
        );
        let hash = OwnerHash::new(2);
        let mut worker = HdaWorker::new(0, &grid, hash);
        let mine: Vec<Position> = (0..grid.cell_count())
            .map(|i| grid.position(i))
            .filter(|&p| hash.owner(p) == 0)
            .take(4)
            .collect();
        worker.admit(&cluster, SearchNode::new(mine[0], 3.0, 1.0, None));
        for &p in &mine[1..] {
            cluster
                .fabric
                .send(
                    0,
                    WorkerMessage {
                        node: SearchNode::new(p, 2.0, 1.0, None),
                        sender: 1,
                    },
                )
                .unwrap();
        }
        assert_eq!(worker.step(&cluster).unwrap(), Step::Absorbed(3));
        assert_eq!(worker.expanded(), 0);
        assert_eq!(worker.open_len(), 4);
        assert_eq!(worker.step(&cluster).unwrap(), Step::Expanded);
        assert_eq!(worker.expanded(), 1);
    }

    #[test]
    fn matches_oracle_on_small_grids() {
        for seed in 0..8 {
            let grid = Grid::generate(25, 0.2, seed).unwrap();
            let oracle = dijkstra_oracle(&grid).cost;
            for threads in [1, 2, 5] {
                let r = hda_search(&grid, &HeuristicKind::euclidean(), threads).unwrap();
                assert_eq!(r.cost, oracle, "seed {seed} threads {threads}");
                assert!(validate_path(&grid, &r));
                assert!(r.ledger.unwrap().is_balanced());
            }
        }
    }

    #[test]
    fn unreachable_terminates() {
        let grid = Grid::parse("S.W\nWW.\n..E").unwrap();
        let r = hda_search(&grid, &HeuristicKind::manhattan(), 4).unwrap();
        assert_eq!(r.cost, None);
    }
}

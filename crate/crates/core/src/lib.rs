//! Parallel best-first search on grid worlds.
//!
//! Three parallel A* engines share one grid model, one set of heuristics and
//! one correctness oracle:
//!
//! * [`kpbfs`]: workers share a lock-guarded open list and closed map.
//! * [`dpa`]: every worker owns its lists and exchanges nodes by random
//!   routing or through a shared blackboard.
//! * [`hda`]: every cell has an owner chosen by hashing, and successors are
//!   mailed to their owners.
//!
//! [`bench`] drives them over generated grids and renders result tables.

pub mod bench;
pub mod dpa;
pub mod grid;
pub mod hda;
pub mod heuristics;
pub mod kpbfs;
mod mix;
pub mod search;
pub mod sync;
mod worker;

pub use grid::{Cell, Grid, GridError, Position};
pub use heuristics::{HeuristicError, HeuristicKind, HeuristicVariant};
pub use search::{
    astar_sequential, dijkstra_oracle, validate_path, SearchError, SearchNode, SearchResult,
};

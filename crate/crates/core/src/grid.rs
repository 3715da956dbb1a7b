//! Square grid worlds: cells, text format, seeded generation and cardinal moves.

use std::collections::VecDeque;
use std::fmt;

use arrayvec::ArrayVec;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of seeds tried by [`Grid::generate`] before giving up on a connected layout.
pub const MAX_GENERATION_ATTEMPTS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub x: u32,
    pub y: u32,
}

impl Position {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Open,
    Wall,
    Start,
    End,
}

impl Cell {
    pub fn symbol(self) -> char {
        match self {
            Cell::Open => '.',
            Cell::Wall => 'W',
            Cell::Start => 'S',
            Cell::End => 'E',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '.' => Some(Cell::Open),
            'W' => Some(Cell::Wall),
            'S' => Some(Cell::Start),
            'E' => Some(Cell::End),
            _ => None,
        }
    }

    pub fn is_wall(self) -> bool {
        self == Cell::Wall
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid side must be at least 2, got {0}")]
    TooSmall(usize),
    #[error("wall probability must lie in [0, 1), got {0}")]
    BadWallProbability(f64),
    #[error("no connected layout found after {attempts} attempts")]
    GenerationExhausted { attempts: u64 },
    #[error("empty grid text")]
    Empty,
    #[error("line {line} has {found} cells, expected {expected}")]
    RaggedLine {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("grid has {lines} lines but rows are {width} cells wide")]
    NotSquare { lines: usize, width: usize },
    #[error("illegal character {ch:?} at {at}")]
    IllegalCharacter { ch: char, at: Position },
    #[error("grid has no start cell 'S'")]
    MissingStart,
    #[error("duplicate start cell 'S' at {0}")]
    DuplicateStart(Position),
    #[error("grid has no end cell 'E'")]
    MissingEnd,
    #[error("duplicate end cell 'E' at {0}")]
    DuplicateEnd(Position),
    #[error("position {at} outside a {n}x{n} grid")]
    OutOfBounds { at: Position, n: usize },
}

/// Cardinal neighbors of a cell, at most four.
pub type Neighbors = ArrayVec<Position, 4>;

/// An immutable `n x n` world with exactly one start and one end cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    n: usize,
    cells: Vec<Cell>,
    start: Position,
    end: Position,
}

impl Grid {
    /// Generates a random connected grid.
    ///
    /// Start and end are drawn first (start uniformly over all cells, end
    /// uniformly over the remaining ones); every other cell then becomes a
    /// wall with probability `wall_probability`, visiting cells in row-major
    /// order and consuming one 64-bit draw per cell. Layouts where the end is
    /// unreachable are rejected and retried on the generator seeded with
    /// `seed + attempt`.
    pub fn generate(n: usize, wall_probability: f64, seed: u64) -> Result<Grid, GridError> {
        if n < 2 {
            return Err(GridError::TooSmall(n));
        }
        if !(0.0..1.0).contains(&wall_probability) {
            return Err(GridError::BadWallProbability(wall_probability));
        }
        for attempt in 0..MAX_GENERATION_ATTEMPTS {
            let grid = Self::generate_layout(n, wall_probability, seed.wrapping_add(attempt));
            if grid.is_connected() {
                return Ok(grid);
            }
        }
        Err(GridError::GenerationExhausted {
            attempts: MAX_GENERATION_ATTEMPTS,
        })
    }

    fn generate_layout(n: usize, wall_probability: f64, seed: u64) -> Grid {
        let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
        let total = (n * n) as u64;
        let start = (rng.next_u64() % total) as usize;
        let mut end = (rng.next_u64() % (total - 1)) as usize;
        if end >= start {
            end += 1;
        }
        let cells = (0..n * n)
            .map(|i| {
                if i == start {
                    Cell::Start
                } else if i == end {
                    Cell::End
                } else if unit_interval(rng.next_u64()) < wall_probability {
                    Cell::Wall
                } else {
                    Cell::Open
                }
            })
            .collect();
        Grid {
            n,
            cells,
            start: position_of(n, start),
            end: position_of(n, end),
        }
    }

    /// Parses the `.`/`S`/`E`/`W` text format. A trailing newline is accepted.
    pub fn parse(text: &str) -> Result<Grid, GridError> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        if body.is_empty() {
            return Err(GridError::Empty);
        }
        let lines: Vec<&str> = body.split('\n').collect();
        let width = lines[0].chars().count();
        let mut cells = Vec::with_capacity(width * lines.len());
        let mut start = None;
        let mut end = None;
        for (y, line) in lines.iter().enumerate() {
            let found = line.chars().count();
            if found != width {
                return Err(GridError::RaggedLine {
                    line: y,
                    expected: width,
                    found,
                });
            }
            for (x, ch) in line.chars().enumerate() {
                let at = Position::new(x as u32, y as u32);
                let cell = Cell::from_symbol(ch).ok_or(GridError::IllegalCharacter { ch, at })?;
                match cell {
                    Cell::Start if start.is_some() => return Err(GridError::DuplicateStart(at)),
                    Cell::Start => start = Some(at),
                    Cell::End if end.is_some() => return Err(GridError::DuplicateEnd(at)),
                    Cell::End => end = Some(at),
                    _ => {}
                }
                cells.push(cell);
            }
        }
        if lines.len() != width {
            return Err(GridError::NotSquare {
                lines: lines.len(),
                width,
            });
        }
        let n = width;
        if n < 2 {
            return Err(GridError::TooSmall(n));
        }
        Ok(Grid {
            n,
            cells,
            start: start.ok_or(GridError::MissingStart)?,
            end: end.ok_or(GridError::MissingEnd)?,
        })
    }

    /// Renders rows joined by `\n`, without a trailing newline.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(self.n * (self.n + 1));
        for (y, row) in self.cells.chunks(self.n).enumerate() {
            if y > 0 {
                out.push('\n');
            }
            out.extend(row.iter().map(|c| c.symbol()));
        }
        out
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn start(&self) -> Position {
        self.start
    }

    pub fn end(&self) -> Position {
        self.end
    }

    pub fn contains(&self, p: Position) -> bool {
        (p.x as usize) < self.n && (p.y as usize) < self.n
    }

    pub fn cell(&self, p: Position) -> Result<Cell, GridError> {
        self.check(p)?;
        Ok(self.cells[self.index(p)])
    }

    pub fn is_wall(&self, p: Position) -> bool {
        self.contains(p) && self.cells[self.index(p)].is_wall()
    }

    /// Row-major index of an in-bounds position.
    #[inline]
    pub fn index(&self, p: Position) -> usize {
        p.y as usize * self.n + p.x as usize
    }

    #[inline]
    pub fn position(&self, index: usize) -> Position {
        position_of(self.n, index)
    }

    /// Open neighbors of `p` in the order up, down, left, right.
    pub fn neighbors(&self, p: Position) -> Result<Neighbors, GridError> {
        self.check(p)?;
        Ok(self.neighbors_unchecked(p))
    }

    #[inline]
    pub(crate) fn neighbors_unchecked(&self, p: Position) -> Neighbors {
        let mut out = Neighbors::new();
        let last = self.n as u32 - 1;
        let mut push = |q: Position| {
            if !self.cells[self.index(q)].is_wall() {
                out.push(q);
            }
        };
        if p.y > 0 {
            push(Position::new(p.x, p.y - 1));
        }
        if p.y < last {
            push(Position::new(p.x, p.y + 1));
        }
        if p.x > 0 {
            push(Position::new(p.x - 1, p.y));
        }
        if p.x < last {
            push(Position::new(p.x + 1, p.y));
        }
        out
    }

    /// Whether `end` is reachable from `start` through non-wall cells.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::new();
        let start = self.index(self.start);
        let end = self.index(self.end);
        seen[start] = true;
        queue.push_back(self.start);
        while let Some(p) = queue.pop_front() {
            if self.index(p) == end {
                return true;
            }
            for q in self.neighbors_unchecked(p) {
                let i = self.index(q);
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back(q);
                }
            }
        }
        false
    }

    fn check(&self, p: Position) -> Result<(), GridError> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(GridError::OutOfBounds { at: p, n: self.n })
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

fn position_of(n: usize, index: usize) -> Position {
    Position::new((index % n) as u32, (index / n) as u32)
}

/// Top 53 bits of a draw mapped onto [0, 1).
fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

//! Benchmark harness: runs an engine over a grid for several thread counts,
//! checks every answer against the oracle, and renders result tables.

use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::dpa::{self, DistributionStrategy, DpaConfig};
use crate::grid::{Grid, GridError};
use crate::hda::{self, HdaConfig};
use crate::heuristics::HeuristicKind;
use crate::kpbfs::{self, KpbfsConfig};
use crate::search::{astar_sequential, dijkstra_oracle, validate_path, SearchError, SearchResult};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
pub const DEFAULT_REPS_CHEAP: usize = 10;
pub const DEFAULT_REPS_EXPENSIVE: usize = 5;

pub const CSV_HEADER: &str =
    "algorithm,heuristic,threads,n,seed,reps,mean_s,min_s,max_s,mean_expanded,cost,oracle_cost,optimal,hangs";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown algorithm {0:?}; expected one of sequential, kpbfs, dpa-random, dpa-blackboard, hda")]
    UnknownAlgorithm(String),
    #[error("unknown output format {0:?}; expected one of csv, markdown, json")]
    UnknownFormat(String),
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("search failed: {0}")]
    Search(#[from] SearchError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Sequential,
    Kpbfs,
    DpaRandom,
    DpaBlackboard,
    Hda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Sequential,
        Algorithm::Kpbfs,
        Algorithm::DpaRandom,
        Algorithm::DpaBlackboard,
        Algorithm::Hda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sequential => "sequential",
            Algorithm::Kpbfs => "kpbfs",
            Algorithm::DpaRandom => "dpa-random",
            Algorithm::DpaBlackboard => "dpa-blackboard",
            Algorithm::Hda => "hda",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| BenchError::UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Markdown,
    Json,
}

impl FromStr for OutputFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            "json" => Ok(Self::Json),
            _ => Err(BenchError::UnknownFormat(s.to_string())),
        }
    }
}

/// Knobs specific to individual engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineParams {
    pub kpbfs_batch: usize,
    pub bb_threshold: f64,
    pub bb_batch: usize,
    pub route_seed: u64,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            kpbfs_batch: 1,
            bb_threshold: dpa::DEFAULT_BLACKBOARD_THRESHOLD,
            bb_batch: dpa::DEFAULT_BLACKBOARD_BATCH,
            route_seed: 0,
        }
    }
}

/// Runs one search with `algorithm`. `threads` is ignored by the sequential baseline.
pub fn run_engine(
    algorithm: Algorithm,
    grid: &Grid,
    kind: &HeuristicKind,
    threads: usize,
    params: &EngineParams,
    timeout: Duration,
) -> Result<SearchResult, SearchError> {
    match algorithm {
        Algorithm::Sequential => Ok(astar_sequential(grid, kind)),
        Algorithm::Kpbfs => {
            let cfg = KpbfsConfig {
                threads,
                batch: params.kpbfs_batch,
                timeout,
            };
            kpbfs::kpbfs_search_with(grid, kind, &cfg).map(|(r, _)| r)
        }
        Algorithm::DpaRandom | Algorithm::DpaBlackboard => {
            let strategy = if algorithm == Algorithm::DpaRandom {
                DistributionStrategy::random(params.route_seed)
            } else {
                DistributionStrategy::Blackboard {
                    threshold: params.bb_threshold,
                    batch: params.bb_batch,
                }
            };
            let cfg = DpaConfig {
                timeout,
                ..DpaConfig::new(threads, strategy)
            };
            dpa::dpa_search_with(grid, kind, &cfg)
        }
        Algorithm::Hda => {
            let cfg = HdaConfig {
                timeout,
                ..HdaConfig::new(threads)
            };
            hda::hda_search_with(grid, kind, &cfg)
        }
    }
}

#[derive(Debug, Clone)]
pub enum GridSource {
    Generate {
        n: usize,
        wall_probability: f64,
        seed: u64,
    },
    Loaded(Grid),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub algorithm: Algorithm,
    pub heuristic: HeuristicKind,
    pub threads: Vec<usize>,
    pub grid: GridSource,
    pub repetitions: usize,
    pub timeout: Duration,
    pub params: EngineParams,
    /// Run once untimed before the timed repetitions.
    pub warmup: bool,
}

impl BenchConfig {
    pub fn new(algorithm: Algorithm, heuristic: HeuristicKind, threads: Vec<usize>, n: usize, seed: u64) -> Self {
        let slow = !heuristic.delay().is_zero();
        Self {
            algorithm,
            heuristic,
            threads,
            grid: GridSource::Generate {
                n,
                wall_probability: 0.2,
                seed,
            },
            repetitions: if slow {
                DEFAULT_REPS_EXPENSIVE
            } else {
                DEFAULT_REPS_CHEAP
            },
            timeout: DEFAULT_TIMEOUT,
            params: EngineParams::default(),
            warmup: true,
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        if self.repetitions == 0 {
            return Err(BenchError::InvalidConfig("repetitions must be at least 1"));
        }
        if self.threads.is_empty() {
            return Err(BenchError::InvalidConfig("thread list is empty"));
        }
        if self.threads.contains(&0) {
            return Err(BenchError::InvalidConfig("thread counts must be positive"));
        }
        if self.timeout.is_zero() {
            return Err(BenchError::InvalidConfig("timeout must be positive"));
        }
        Ok(())
    }
}

/// Summary of the timed repetitions at one thread count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub heuristic: String,
    pub threads: usize,
    pub n: usize,
    pub seed: Option<u64>,
    pub reps: usize,
    /// Timing statistics over runs that finished; `None` if every run hung.
    pub mean_s: Option<f64>,
    pub min_s: Option<f64>,
    pub max_s: Option<f64>,
    pub mean_expanded: Option<f64>,
    /// Worst cost over finished runs.
    pub cost: Option<f64>,
    pub oracle_cost: Option<f64>,
    /// Every finished run returned the oracle cost.
    pub optimal: bool,
    /// Every finished run returned a valid path.
    pub valid: bool,
    pub admissible: bool,
    pub hangs: usize,
}

impl BenchRecord {
    /// Admissible runs must be optimal and every run must be feasible.
    pub fn is_correct(&self) -> bool {
        self.valid && (!self.admissible || self.optimal)
    }

    pub fn all_hung(&self) -> bool {
        self.hangs == self.reps
    }
}

pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    config.validate()?;
    let (grid, seed) = match &config.grid {
        GridSource::Generate {
            n,
            wall_probability,
            seed,
        } => (Grid::generate(*n, *wall_probability, *seed)?, Some(*seed)),
        GridSource::Loaded(grid) => (grid.clone(), None),
    };
    let oracle = dijkstra_oracle(&grid);
    let mut records = Vec::with_capacity(config.threads.len());
    for &threads in &config.threads {
        let run = || {
            run_engine(
                config.algorithm,
                &grid,
                &config.heuristic,
                threads,
                &config.params,
                config.timeout,
            )
        };
        if config.warmup {
            match run() {
                Ok(_) | Err(SearchError::Hang(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let mut times = Vec::with_capacity(config.repetitions);
        let mut results = Vec::with_capacity(config.repetitions);
        let mut hangs = 0;
        for _ in 0..config.repetitions {
            let t = Instant::now();
            match run() {
                Ok(r) => {
                    times.push(t.elapsed().as_secs_f64());
                    results.push(r);
                }
                Err(SearchError::Hang(_)) => hangs += 1,
                Err(e) => return Err(e.into()),
            }
        }
        records.push(summarize(config, &grid, seed, threads, &oracle, &times, &results, hangs));
    }
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    config: &BenchConfig,
    grid: &Grid,
    seed: Option<u64>,
    threads: usize,
    oracle: &SearchResult,
    times: &[f64],
    results: &[SearchResult],
    hangs: usize,
) -> BenchRecord {
    let finished = !times.is_empty();
    let mean = |xs: &mut dyn Iterator<Item = f64>| {
        finished.then(|| xs.sum::<f64>() / times.len() as f64)
    };
    BenchRecord {
        algorithm: config.algorithm,
        heuristic: config.heuristic.variant().name().to_string(),
        threads,
        n: grid.side(),
        seed,
        reps: config.repetitions,
        mean_s: mean(&mut times.iter().copied()),
        min_s: times.iter().copied().reduce(f64::min),
        max_s: times.iter().copied().reduce(f64::max),
        mean_expanded: mean(&mut results.iter().map(|r| r.nodes_expanded as f64)),
        cost: results
            .iter()
            .map(|r| r.cost.unwrap_or(f64::INFINITY))
            .reduce(f64::max)
            .map(|c| c.is_finite().then_some(c))
            .unwrap_or(None),
        oracle_cost: oracle.cost,
        optimal: results.iter().all(|r| r.cost == oracle.cost),
        valid: results.iter().all(|r| validate_path(grid, r)),
        admissible: config.heuristic.is_admissible(),
        hangs,
    }
}

fn opt(v: Option<f64>, precision: usize) -> String {
    v.map_or_else(String::new, |v| format!("{v:.precision$}"))
}

fn opt_u64(v: Option<u64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Renders records as CSV (fixed header), a Markdown table, or a JSON array.
pub fn emit(records: &[BenchRecord], format: OutputFormat) -> String {
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in records {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.algorithm,
                    r.heuristic,
                    r.threads,
                    r.n,
                    opt_u64(r.seed),
                    r.reps,
                    opt(r.mean_s, 6),
                    opt(r.min_s, 6),
                    opt(r.max_s, 6),
                    opt(r.mean_expanded, 1),
                    opt(r.cost, 0),
                    opt(r.oracle_cost, 0),
                    r.optimal,
                    r.hangs
                );
            }
        }
        OutputFormat::Markdown => {
            out.push_str("| Thread Count | Run Time (Seconds) | Min (s) | Max (s) | Expanded | Cost | Oracle | Optimal | Hangs |\n");
            out.push_str("|---:|---:|---:|---:|---:|---:|---:|:---:|---:|\n");
            for r in records {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                    r.threads,
                    opt(r.mean_s, 5),
                    opt(r.min_s, 5),
                    opt(r.max_s, 5),
                    opt(r.mean_expanded, 0),
                    opt(r.cost, 0),
                    opt(r.oracle_cost, 0),
                    if r.optimal { "yes" } else { "no" },
                    r.hangs
                );
            }
        }
        OutputFormat::Json => {
            out = serde_json::to_string_pretty(records).expect("records serialize");
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub n: usize,
    pub seed: u64,
    pub oracle_cost: Option<f64>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `count` grids per size (seeds `seed, seed + 1, ...`) into
/// `directory`, plus a JSON manifest carrying each grid's oracle cost.
pub fn gen_corpus(
    sizes: &[usize],
    count: usize,
    seed: u64,
    wall_probability: f64,
    directory: &Path,
) -> Result<Vec<ManifestEntry>, BenchError> {
    if sizes.is_empty() {
        return Err(BenchError::InvalidConfig("no grid sizes given"));
    }
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BenchError::Io { path, source }
    };
    fs::create_dir_all(directory).map_err(io_err(directory))?;
    let mut manifest = Vec::with_capacity(sizes.len() * count);
    for &n in sizes {
        for k in 0..count {
            let grid_seed = seed.wrapping_add(k as u64);
            let grid = Grid::generate(n, wall_probability, grid_seed)?;
            let file = format!("grid_n{n}_s{grid_seed}.grid");
            let path = directory.join(&file);
            let mut text = grid.serialize();
            text.push('\n');
            fs::write(&path, text).map_err(io_err(&path))?;
            manifest.push(ManifestEntry {
                file,
                n,
                seed: grid_seed,
                oracle_cost: dijkstra_oracle(&grid).cost,
            });
        }
    }
    let path = directory.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(manifest)
}

/// Reads a `.grid` file.
pub fn load_grid(path: &Path) -> Result<Grid, BenchError> {
    let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Grid::parse(&text)?)
}

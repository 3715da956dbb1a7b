//! End-to-end acceptance checks. Runs every criterion in sequence (timing
//! criteria must not share the machine with each other), prints one
//! PASS/FAIL line per criterion and exits non-zero if any failed.

use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use parastar::bench::{self, Algorithm, BenchConfig, EngineParams};
use parastar::sync::{BarrierError, DynamicBarrier, Incumbent};
use parastar::{dijkstra_oracle, validate_path, Grid, HeuristicKind, SearchError, SearchResult};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

const WALLS: f64 = 0.2;
const THREADS: [usize; 5] = [1, 2, 4, 8, 16];
const RUN_TIMEOUT: Duration = Duration::from_secs(120);
const EXPENSIVE_DELAY: Duration = Duration::from_millis(1);
const EXPENSIVE_SEEDS: [u64; 3] = [1, 2, 3];
const EXPENSIVE_REPS: usize = 2;
const NOISE: f64 = 5.0;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn run(
    algorithm: Algorithm,
    grid: &Grid,
    kind: &HeuristicKind,
    threads: usize,
    route_seed: u64,
) -> Result<SearchResult, SearchError> {
    let params = EngineParams {
        route_seed,
        ..EngineParams::default()
    };
    bench::run_engine(algorithm, grid, kind, threads, &params, RUN_TIMEOUT)
}

fn thread_counts(algorithm: Algorithm) -> &'static [usize] {
    if algorithm == Algorithm::Sequential {
        &THREADS[..1]
    } else {
        &THREADS
    }
}

/// Pooled mean wall time per thread count over several grids.
fn expensive_means(algorithm: Algorithm, threads: &[usize]) -> Result<Vec<f64>, String> {
    let kind = HeuristicKind::expensive(EXPENSIVE_DELAY).map_err(|e| e.to_string())?;
    let mut totals = vec![0.0; threads.len()];
    for &seed in &EXPENSIVE_SEEDS {
        let mut config = BenchConfig::new(algorithm, kind, threads.to_vec(), 100, seed);
        config.repetitions = EXPENSIVE_REPS;
        config.params.route_seed = seed;
        let records = bench::run_bench(&config).map_err(|e| e.to_string())?;
        for (total, record) in totals.iter_mut().zip(&records) {
            if !record.is_correct() || record.hangs > 0 {
                return Err(format!(
                    "{} threads on seed {seed}: incorrect or hung",
                    record.threads
                ));
            }
            *total += record.mean_s.unwrap_or(f64::INFINITY);
        }
    }
    Ok(totals
        .into_iter()
        .map(|t| t / EXPENSIVE_SEEDS.len() as f64)
        .collect())
}

fn fmt_means(threads: &[usize], means: &[f64]) -> String {
    threads
        .iter()
        .zip(means)
        .map(|(t, m)| format!("{t}t={m:.3}s"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn oracle_optimality() -> Outcome {
    let mut runs = 0;
    let mut failures = Vec::new();
    let kinds = [HeuristicKind::euclidean(), HeuristicKind::manhattan()];
    for seed in 0..100 {
        let grid = Grid::generate(100, WALLS, seed).expect("grid");
        let oracle = dijkstra_oracle(&grid).cost;
        for algorithm in Algorithm::ALL {
            for kind in &kinds {
                for &threads in thread_counts(algorithm) {
                    runs += 1;
                    let ok = match run(algorithm, &grid, kind, threads, seed) {
                        Ok(r) => {
                            r.cost == oracle
                                && validate_path(&grid, &r)
                                && r.ledger.is_none_or(|l| l.is_balanced())
                        }
                        Err(_) => false,
                    };
                    if !ok {
                        failures.push(format!("{}/{kind}/{threads}t/seed {seed}", algorithm.name()));
                    }
                }
            }
        }
    }
    let mut detail = format!("{runs} runs, {} failures", failures.len());
    if !failures.is_empty() {
        detail += &format!(" (first: {})", failures[0]);
    }
    Outcome::new(failures.is_empty(), detail)
}

fn kpbfs_expensive() -> Outcome {
    let threads = [1, 4, 16];
    match expensive_means(Algorithm::Kpbfs, &threads) {
        Ok(m) => Outcome::new(m[1] <= 0.6 * m[0] && m[2] < m[1], fmt_means(&threads, &m)),
        Err(e) => Outcome::new(false, e),
    }
}

fn hda_expensive() -> Outcome {
    let threads = [1, 4, 8];
    match expensive_means(Algorithm::Hda, &threads) {
        Ok(m) => Outcome::new(m[1] <= 0.85 * m[0] && m[2] < m[0], fmt_means(&threads, &m)),
        Err(e) => Outcome::new(false, e),
    }
}

fn dpa_expensive() -> Outcome {
    let threads = [1, 8];
    match expensive_means(Algorithm::DpaRandom, &threads) {
        Ok(m) => Outcome::new(m[1] < m[0], fmt_means(&threads, &m)),
        Err(e) => Outcome::new(false, e),
    }
}

/// Sixteen threads should not beat one on a cheap heuristic; only a large
/// win (over 2x) fails, since that points at a missing shared lock.
fn kpbfs_contention() -> Outcome {
    let threads = [1, 16];
    let mut totals = [0.0; 2];
    let seeds = 0..5;
    let count = seeds.clone().count() as f64;
    for seed in seeds {
        let mut config = BenchConfig::new(
            Algorithm::Kpbfs,
            HeuristicKind::manhattan(),
            threads.to_vec(),
            1000,
            seed,
        );
        config.repetitions = 3;
        let records = match bench::run_bench(&config) {
            Ok(r) => r,
            Err(e) => return Outcome::new(false, e.to_string()),
        };
        for (total, r) in totals.iter_mut().zip(&records) {
            if !r.is_correct() || r.hangs > 0 {
                return Outcome::new(false, format!("seed {seed}: incorrect or hung"));
            }
            *total += r.mean_s.unwrap_or(f64::INFINITY);
        }
    }
    let means = totals.map(|t| t / count);
    let mut detail = fmt_means(&threads, &means);
    if means[1] < means[0] {
        detail += " (warning: 16 threads faster than 1)";
    }
    Outcome::new(means[1] * 2.0 >= means[0], detail)
}

fn hang_elimination() -> Outcome {
    let mut hangs = 0;
    let mut errors = 0;
    let mut slowest = Duration::ZERO;
    for algorithm in [Algorithm::DpaRandom, Algorithm::Hda] {
        for seed in 0..50 {
            let grid = Grid::generate(1000, WALLS, seed).expect("grid");
            let started = Instant::now();
            match run(algorithm, &grid, &HeuristicKind::manhattan(), 16, seed) {
                Ok(_) => {}
                Err(SearchError::Hang(_)) => hangs += 1,
                Err(_) => errors += 1,
            }
            slowest = slowest.max(started.elapsed());
        }
    }
    Outcome::new(
        hangs == 0 && errors == 0 && slowest < RUN_TIMEOUT,
        format!("100 runs, {hangs} hangs, {errors} errors, slowest {slowest:.2?}"),
    )
}

fn heuristic_accuracy() -> Outcome {
    let (mut man, mut euc) = (0u64, 0u64);
    for seed in 0..50 {
        let grid = Grid::generate(1000, WALLS, seed).expect("grid");
        man += parastar::astar_sequential(&grid, &HeuristicKind::manhattan()).nodes_expanded;
        euc += parastar::astar_sequential(&grid, &HeuristicKind::euclidean()).nodes_expanded;
    }
    Outcome::new(
        man < euc,
        format!(
            "mean expanded manhattan={:.0} euclidean={:.0}",
            man as f64 / 50.0,
            euc as f64 / 50.0
        ),
    )
}

fn inadmissible_feasibility() -> Outcome {
    let mut runs = 0;
    let mut above = 0;
    let mut failures = Vec::new();
    for seed in 0..50 {
        let grid = Grid::generate(100, WALLS, seed).expect("grid");
        let oracle = dijkstra_oracle(&grid).cost.expect("generated grids are connected");
        let kind = HeuristicKind::inadmissible(NOISE, seed).expect("valid noise");
        for algorithm in Algorithm::ALL {
            runs += 1;
            let ok = match run(algorithm, &grid, &kind, 4, seed) {
                Ok(r) => {
                    let cost = r.cost.unwrap_or(f64::NAN);
                    above += usize::from(cost > oracle);
                    cost >= oracle && validate_path(&grid, &r)
                }
                Err(_) => false,
            };
            if !ok {
                failures.push(format!("{}/seed {seed}", algorithm.name()));
            }
        }
    }
    let mut detail = format!(
        "{runs} runs, {} failures, {above} above optimal",
        failures.len()
    );
    if let Some(first) = failures.first() {
        detail += &format!(" (first: {first})");
    }
    Outcome::new(failures.is_empty(), detail)
}

/// One randomized schedule: every worker waits a random number of rounds
/// (with random jitter) and then leaves. Each wait must return its round number.
fn barrier_schedule(rng: &mut Xoshiro256StarStar) -> Result<(), String> {
    let workers = 1 + (rng.next_u64() % 8) as usize;
    let barrier = Arc::new(DynamicBarrier::new(workers));
    let plans: Vec<(u64, u64)> = (0..workers)
        .map(|_| (rng.next_u64() % 4, rng.next_u64()))
        .collect();
    let handles: Vec<_> = plans
        .into_iter()
        .enumerate()
        .map(|(id, (rounds, jitter))| {
            let barrier = Arc::clone(&barrier);
            thread::spawn(move || -> Result<(), BarrierError> {
                for round in 1..=rounds {
                    if (jitter >> round) & 1 == 1 {
                        thread::yield_now();
                    }
                    let generation = barrier.wait_timeout(id, Duration::from_secs(10))?;
                    assert_eq!(generation, round, "worker {id} released in the wrong round");
                }
                barrier.leave(id)
            })
        })
        .collect();
    for handle in handles {
        match handle.join() {
            Ok(Ok(())) => {}
            Ok(Err(e)) => return Err(e.to_string()),
            Err(_) => return Err("worker panicked".into()),
        }
    }
    Ok(())
}

fn sync_kit() -> Outcome {
    let mut rng = Xoshiro256StarStar::seed_from_u64(0x5eed);
    for schedule in 0..10_000 {
        if let Err(e) = barrier_schedule(&mut rng) {
            return Outcome::new(false, format!("barrier schedule {schedule}: {e}"));
        }
    }

    for trial in 0..200u64 {
        let incumbent = Arc::new(Incumbent::new());
        let candidates: Vec<Vec<f64>> = (0..8u64)
            .map(|w| (0..50).map(|i| (1000 - (trial + w * 7 + i * 13) % 997) as f64).collect())
            .collect();
        let minimum = candidates.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let handles: Vec<_> = candidates
            .into_iter()
            .enumerate()
            .map(|(w, costs)| {
                let incumbent = Arc::clone(&incumbent);
                thread::spawn(move || {
                    for c in costs {
                        incumbent.try_improve(c, w);
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().expect("racer panicked");
        }
        if incumbent.cost() != minimum {
            return Outcome::new(
                false,
                format!("incumbent race {trial}: {} != {minimum}", incumbent.cost()),
            );
        }
    }
    Outcome::new(
        true,
        "10000 barrier schedules, 200 incumbent races; ledger balance checked in criterion 1",
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("oracle optimality", oracle_optimality),
        ("expensive heuristic scaling, kpbfs", kpbfs_expensive),
        ("expensive heuristic scaling, hda", hda_expensive),
        ("expensive heuristic scaling, dpa", dpa_expensive),
        ("cheap heuristic contention, kpbfs", kpbfs_contention),
        ("hang elimination", hang_elimination),
        ("heuristic accuracy", heuristic_accuracy),
        ("inadmissible feasibility", inadmissible_feasibility),
        ("sync kit properties", sync_kit),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == number.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = check();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {number} [{verdict}] {name}: {} ({:.1?})",
            outcome.detail,
            started.elapsed()
        );
        failed += usize::from(!outcome.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use parastar::bench::{
    self, Algorithm, BenchConfig, EngineParams, GridSource, OutputFormat, DEFAULT_REPS_CHEAP,
    DEFAULT_REPS_EXPENSIVE,
};
use parastar::heuristics::{HeuristicKind, HeuristicVariant, DEFAULT_NOISE_SCALE};

const EXIT_USAGE: u8 = 1;
const EXIT_INCORRECT: u8 = 2;
const EXIT_ALL_HUNG: u8 = 3;

#[derive(Parser)]
#[command(name = "parastar", version, about = "Parallel A* benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time an engine over one grid at several thread counts.
    Bench(BenchArgs),
    /// Write a reproducible set of .grid files plus a manifest.
    GenCorpus(CorpusArgs),
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "kpbfs")]
    algorithm: Algorithm,
    #[arg(long, default_value = "manhattan")]
    heuristic: HeuristicVariant,
    /// Comma-separated thread counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    threads: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    size: usize,
    #[arg(long, default_value_t = 0.2)]
    wall_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Timed repetitions (default 10, or 5 for expensive heuristics).
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 120)]
    timeout_secs: u64,
    #[arg(long, default_value = "markdown")]
    format: OutputFormat,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Benchmark this grid instead of generating one.
    #[arg(long)]
    grid_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    delay_ms: u64,
    #[arg(long, default_value_t = DEFAULT_NOISE_SCALE)]
    noise: f64,
    /// Nodes per shared-queue pop for kpbfs.
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long, default_value_t = parastar::dpa::DEFAULT_BLACKBOARD_THRESHOLD)]
    bb_threshold: f64,
    #[arg(long, default_value_t = parastar::dpa::DEFAULT_BLACKBOARD_BATCH)]
    bb_batch: usize,
    /// Skip the untimed warm-up run.
    #[arg(long)]
    no_warmup: bool,
}

#[derive(Args)]
struct CorpusArgs {
    /// Comma-separated grid sides.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    wall_prob: f64,
    #[arg(long)]
    dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Bench(args) => bench_cmd(args),
        Command::GenCorpus(args) => corpus_cmd(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn bench_cmd(args: BenchArgs) -> anyhow::Result<ExitCode> {
    let heuristic = HeuristicKind::new(
        args.heuristic,
        args.noise,
        Duration::from_millis(args.delay_ms),
        args.seed,
    )?;
    let mut config = BenchConfig::new(args.algorithm, heuristic, args.threads, args.size, args.seed);
    if let GridSource::Generate {
        wall_probability, ..
    } = &mut config.grid
    {
        *wall_probability = args.wall_prob;
    }
    if let Some(path) = &args.grid_file {
        config.grid = GridSource::Loaded(bench::load_grid(path)?);
    }
    config.repetitions = args.reps.unwrap_or(if heuristic.delay().is_zero() {
        DEFAULT_REPS_CHEAP
    } else {
        DEFAULT_REPS_EXPENSIVE
    });
    config.timeout = Duration::from_secs(args.timeout_secs);
    config.warmup = !args.no_warmup;
    config.params = EngineParams {
        kpbfs_batch: args.batch,
        bb_threshold: args.bb_threshold,
        bb_batch: args.bb_batch,
        route_seed: args.seed,
    };

    let records = bench::run_bench(&config)?;
    let table = bench::emit(&records, args.format);
    match &args.out {
        Some(path) => fs::write(path, &table).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{table}"),
    }

    if let Some(bad) = records.iter().find(|r| !r.is_correct()) {
        eprintln!(
            "correctness failure at {} threads: cost {:?}, oracle {:?}, valid paths {}",
            bad.threads, bad.cost, bad.oracle_cost, bad.valid
        );
        return Ok(ExitCode::from(EXIT_INCORRECT));
    }
    if records.iter().any(|r| r.all_hung()) {
        eprintln!("every run hung for at least one thread count");
        return Ok(ExitCode::from(EXIT_ALL_HUNG));
    }
    Ok(ExitCode::SUCCESS)
}

fn corpus_cmd(args: CorpusArgs) -> anyhow::Result<ExitCode> {
    let manifest = bench::gen_corpus(&args.sizes, args.count, args.seed, args.wall_prob, &args.dir)?;
    println!(
        "wrote {} grids and {} to {}",
        manifest.len(),
        bench::MANIFEST_FILE,
        args.dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

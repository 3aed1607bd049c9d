//! `qsgcnn` batch command line: preprocess, train, evaluate, inspect, summarize.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsgcnn::Error;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Debug, Parser)]
#[command(name = "qsgcnn", version, about = "Quantum-walk graph convolution classifier")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Location {
    /// Directory with `<NAME>_A.txt`, `<NAME>_graph_indicator.txt`, ...
    #[arg(long)]
    pub dataset: Option<PathBuf>,

    /// Run identifier; defaults to the dataset directory name.
    #[arg(long)]
    pub name: Option<String>,

    /// Artifact root; files go to `<out>/<name>/`.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Align every graph and cache grids and mixing matrices.
    Preprocess {
        #[command(flatten)]
        loc: Location,
        #[arg(long, default_value_t = 64)]
        prototypes: usize,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cross-validate the network on preprocessed artifacts.
    Train(TrainArgs),
    /// Re-evaluate saved fold checkpoints on their test folds.
    Evaluate {
        #[command(flatten)]
        loc: Location,
        /// Only this fold.
        #[arg(long)]
        fold: Option<usize>,
    },
    /// Report on one graph.
    Inspect {
        #[command(flatten)]
        loc: Location,
        #[arg(long, default_value_t = 0)]
        graph: usize,
        /// Validate the graph and its mixing matrices; nonzero exit on failure.
        #[arg(long)]
        check: bool,
    },
    /// Aggregate metrics files from repeated runs.
    Summarize {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub loc: Location,
    /// Expected prototype count; refuses caches built with another value.
    #[arg(long)]
    pub prototypes: Option<usize>,
    /// Expected depth; refuses caches built with another value.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub layers: usize,
    #[arg(long, default_value_t = 32)]
    pub channels: usize,
    #[arg(long, default_value_t = 5e-5)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fit prototypes on each fold's training graphs only.
    #[arg(long)]
    pub inductive: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Numeric(_) => 3,
        _ => 2,
    }
}

fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("error: {}", msg.replace('\n', " "));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("usage error");
            return fail(1, first.trim_start_matches("error: "));
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(1, "--threads must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(1, &e.to_string());
        }
    }
    let result = match cli.command {
        Command::Preprocess {
            loc,
            prototypes,
            depth,
            seed,
        } => commands::preprocess(&loc, prototypes, depth, seed),
        Command::Train(args) => commands::train(&args),
        Command::Evaluate { loc, fold } => commands::evaluate(&loc, fold),
        Command::Inspect { loc, graph, check } => commands::inspect(&loc, graph, check),
        Command::Summarize { metrics } => commands::summarize(&metrics),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(exit_code(&e), &e.to_string()),
    }
}

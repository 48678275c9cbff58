mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use migtriad::{RankingModel, UniverseMode};

use crate::stages::Config;

/// Corridor and cluster statistics for multi-country residence histories.
///
/// Every flag can also be set through an environment variable named
/// `MIGTRIAD_<FLAG>` (for example `MIGTRIAD_MIN_RESIDENTS=500`).
#[derive(Parser, Debug)]
#[command(name = "migtriad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Line-delimited JSON migrant records.
    #[arg(long, global = true, env = "MIGTRIAD_RECORDS")]
    records: Option<PathBuf>,

    /// Country metadata table.
    #[arg(long, global = true, env = "MIGTRIAD_META")]
    meta: Option<PathBuf>,

    /// Working directory: stages read upstream outputs from here and write their own.
    #[arg(long, global = true, env = "MIGTRIAD_OUT", default_value = "out")]
    out: PathBuf,

    /// Minimum number of users who lived in a country for it to be kept.
    #[arg(
        long,
        global = true,
        env = "MIGTRIAD_MIN_RESIDENTS",
        default_value_t = 1000
    )]
    min_residents: u64,

    /// Expected-ranking model used for the ranked-triple export and classes.
    #[arg(long, global = true, env = "MIGTRIAD_MODEL", default_value = "r4")]
    model: RankingModel,

    /// Equal-frequency bins for continuous features.
    #[arg(long, global = true, env = "MIGTRIAD_BINS", default_value_t = 10)]
    bins: usize,

    /// Ranking universe: `observed` triples or all triples whose corridors are `pairs`-present.
    #[arg(
        long,
        global = true,
        env = "MIGTRIAD_UNIVERSE",
        default_value = "observed"
    )]
    universe: UniverseMode,

    /// Seed for `synth`.
    #[arg(long, global = true, env = "MIGTRIAD_SEED", default_value_t = 42)]
    seed: u64,

    /// Worker threads for the counting stage.
    #[arg(long, global = true, env = "MIGTRIAD_WORKERS", default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Filter the corpus and write corridor and cluster tables.
    Count,
    /// Rank clusters under the chosen model and evaluate all four models.
    Rank,
    /// Assign deviance classes from the ranked clusters.
    Classify,
    /// Compute triad features and per-class CDF tables.
    Features,
    /// Rank features by information gain and chi-squared.
    Select,
    /// Run every stage and write a summary.
    Report,
    /// Write a synthetic corpus (`records.jsonl`, `meta.csv`).
    Synth {
        /// Write one of the two four-migrant toy scenarios instead.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        toy: Option<u8>,
        /// Number of users in the generated corpus.
        #[arg(long, env = "MIGTRIAD_USERS", default_value_t = 100_000)]
        users: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = Config {
        records: cli.records,
        meta: cli.meta,
        out: cli.out,
        min_residents: cli.min_residents,
        model: cli.model,
        bins: cli.bins,
        universe: cli.universe,
        seed: cli.seed,
        workers: cli.workers,
    };
    let result = match cli.command {
        Command::Count => stages::count(&config).map(|_| ()),
        Command::Rank => stages::rank(&config).map(|_| ()),
        Command::Classify => stages::classify(&config).map(|_| ()),
        Command::Features => stages::features(&config).map(|_| ()),
        Command::Select => stages::select(&config).map(|_| ()),
        Command::Report => stages::report(&config),
        Command::Synth { toy, users } => stages::synth(&config, toy, users),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

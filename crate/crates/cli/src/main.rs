//! Command-line front end for fitting regime-switching blockmodels to
//! weekly trading networks.
//!
//! Exit codes: 0 success; 2 invalid input, unreadable file or bad format;
//! 3 numerical failure inside a sampler; 4 backtest finished but some folds
//! failed (their errors are recorded in `auc_by_week.csv`).

mod manifest;
mod ops;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use blockhmm::Error;

#[derive(Parser)]
#[command(
    name = "blockhmm",
    version,
    about = "Hidden Markov stochastic blockmodels for weekly trading networks"
)]
struct Cli {
    /// TOML run configuration; built-in defaults apply when omitted
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Seed for every random draw the command makes
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory, created if missing
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for independent chains (backtest folds)
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bin date,seller,buyer transactions into weekly networks
    Ingest {
        /// CSV of transactions with header date,seller,buyer
        edges: PathBuf,
        /// Text file with one trader identifier per line
        roster: PathBuf,
    },
    /// Per-week descriptive statistics of a network series
    Stats {
        /// Series directory or packed .jsonl file
        series: PathBuf,
    },
    /// Fit the regime-switching blockmodel by MCMC
    Fit {
        /// Series directory or packed .jsonl file
        series: PathBuf,
    },
    /// Fit the Gaussian-emission comparison model to two summary columns
    FitBaseline {
        /// Summary CSV produced by `stats`
        summary: PathBuf,
        /// First summary column
        #[arg(long, default_value = "mean_degree")]
        x1: String,
        /// Second summary column
        #[arg(long, default_value = "clustering_coefficient")]
        x2: String,
        /// Truncation on the number of hidden states
        #[arg(long, default_value_t = 15)]
        states: usize,
        /// Total sweeps (default 10000)
        #[arg(long)]
        iters: Option<u64>,
        /// Discarded sweeps (default 1000)
        #[arg(long)]
        burnin: Option<u64>,
    },
    /// One-step-ahead link probabilities from a stored trace
    Predict {
        /// trace.jsonl from `fit`
        trace: PathBuf,
        /// Optional series path, used for trader labels
        #[arg(long)]
        series: Option<PathBuf>,
        /// Also write the 0/1 network of probabilities strictly above this
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Refit on growing prefixes and score one-week-ahead predictions
    Backtest {
        /// Series directory or packed .jsonl file
        series: PathBuf,
        /// Number of final weeks to predict
        #[arg(long, default_value_t = 5)]
        holdout: usize,
    },
    /// Point partition, change points, diagnostics and hyperparameter table
    Summarize {
        /// trace.jsonl from `fit`
        trace: PathBuf,
        /// Optional series path, used for period labels
        #[arg(long)]
        series: Option<PathBuf>,
        /// Also report the trader partition of this week (1-based)
        #[arg(long)]
        week: Option<usize>,
    },
    /// Draw a synthetic series from the prior or with planted regimes
    Simulate {
        /// Number of traders
        #[arg(long)]
        traders: usize,
        /// Number of weeks
        #[arg(long)]
        weeks: usize,
        /// Plant this many contiguous regimes instead of drawing the prior
        #[arg(long)]
        regimes: Option<usize>,
        /// Communities per planted regime
        #[arg(long, default_value_t = 2)]
        communities: usize,
        /// Planted within-community link probability
        #[arg(long, default_value_t = 0.65)]
        theta_in: f64,
        /// Planted between-community link probability
        #[arg(long, default_value_t = 0.08)]
        theta_out: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> blockhmm::Result<ExitCode> {
    let out = cli.out.ok_or_else(|| Error::invalid("--out <DIR> is required"))?;
    let ctx = ops::Ctx { out, seed: cli.seed, config: cli.config, jobs: cli.jobs.max(1) };
    match cli.command {
        Command::Ingest { edges, roster } => ops::cmd_ingest(&edges, &roster, &ctx)?,
        Command::Stats { series } => ops::cmd_stats(&series, &ctx)?,
        Command::Fit { series } => ops::cmd_fit(&series, &ctx)?,
        Command::FitBaseline { summary, x1, x2, states, iters, burnin } => {
            ops::cmd_fit_baseline(&summary, &x1, &x2, states, iters, burnin, &ctx)?
        }
        Command::Predict { trace, series, threshold } => {
            ops::cmd_predict(&trace, series.as_deref(), threshold, &ctx)?
        }
        Command::Backtest { series, holdout } => {
            let failed = ops::cmd_backtest(&series, holdout, &ctx)?;
            if failed > 0 {
                return Ok(ExitCode::from(4));
            }
        }
        Command::Summarize { trace, series, week } => {
            ops::cmd_summarize(&trace, series.as_deref(), week, &ctx)?
        }
        Command::Simulate { traders, weeks, regimes, communities, theta_in, theta_out } => {
            ops::cmd_simulate(traders, weeks, regimes, communities, theta_in, theta_out, &ctx)?
        }
    }
    Ok(ExitCode::SUCCESS)
}

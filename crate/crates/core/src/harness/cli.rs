//! The `lobnet` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime
//! failure. Progress goes to stderr; machine-readable output only to
//! files.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use super::{config, io, HarnessError, ScenarioResult};
use crate::kernel::{self, EventLog};
use crate::stats;

#[derive(Parser)]
#[command(
    name = "lobnet",
    version,
    about = "Double-auction market simulation with order-flow spreading over interaction networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file and write all outputs.
    Run(RunArgs),
    /// Recompute statistics from a persisted event log.
    Stats(StatsArgs),
    /// Align several scenario result directories for overlay plotting.
    Compare(CompareArgs),
    /// Generate a network and export its edge list.
    Network(NetworkArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured realization count.
    #[arg(long)]
    realizations: Option<u32>,
    /// Override the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured worker count.
    #[arg(long)]
    jobs: Option<u32>,
}

#[derive(Args)]
struct StatsArgs {
    /// events.csv produced by `run`.
    #[arg(long)]
    log: PathBuf,
    /// Matching trades.csv; enables the trade-sign autocorrelation.
    #[arg(long)]
    trades: Option<PathBuf>,
    /// Directory for the recomputed statistics.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50.0)]
    delta: f64,
    #[arg(long, default_value_t = 72_000.0)]
    burn_in: f64,
    #[arg(long, default_value_t = 720_000.0)]
    horizon: f64,
    /// Initial reference price (mid fallback before any two-sided quote).
    #[arg(long, default_value_t = 100.0)]
    p_ref: f64,
    #[arg(long, default_value_t = 0.01)]
    tick_size: f64,
    #[arg(long, default_value_t = 500)]
    return_max_lag: usize,
    #[arg(long, default_value_t = 300)]
    sign_max_lag: usize,
    #[arg(long, default_value_t = 401)]
    returns_hist_bins: usize,
    #[arg(long, default_value_t = 0.02)]
    returns_hist_max: f64,
    #[arg(long, default_value_t = 10)]
    waiting_bins_per_decade: u32,
    /// Realization index used in the output files' realization column.
    #[arg(long, default_value_t = 0)]
    realization: u32,
}

#[derive(Args)]
struct CompareArgs {
    /// Two or more scenario result directories.
    dirs: Vec<PathBuf>,
    /// Directory for comparison.csv, summary.csv and summary_table.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NetworkArgs {
    /// Topology: lattice, er, or ba.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 25)]
    rows: u32,
    #[arg(long, default_value_t = 40)]
    cols: u32,
    /// Node count for er/ba.
    #[arg(long, default_value_t = 1000)]
    n: u32,
    /// Edge count for er.
    #[arg(long, default_value_t = 4000)]
    edges: u64,
    /// Attachment count for ba.
    #[arg(long, default_value_t = 4)]
    attach: u32,
    /// Seed; matches the network of the `run` realization with the same seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path for the edge list.
    #[arg(long)]
    export: PathBuf,
}

/// Entry point used by `main` and tests. Parses `argv` (including the
/// program name) and returns the process exit code.
pub fn cli<I>(args: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Stats(args) => stats_command(args),
        Command::Compare(args) => compare_command(args),
        Command::Network(args) => network_command(args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn run_command(args: RunArgs) -> Result<(), HarnessError> {
    let mut config = config::load_config(&args.config)?;
    if let Some(out) = args.out {
        config.out_dir = out;
    }
    if let Some(realizations) = args.realizations {
        config.realizations = realizations;
    }
    if let Some(seed) = args.seed {
        config.sim.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        config.jobs = jobs;
    }
    let result = super::run_scenario(&config)?;
    eprintln!(
        "[{}] wrote {} realizations to {}",
        result.label,
        result.per_realization.len(),
        result.out_dir.display()
    );
    Ok(())
}

fn stats_command(args: StatsArgs) -> Result<(), HarnessError> {
    let records = io::read_events_csv(&args.log, args.tick_size)?;
    let trades = match &args.trades {
        Some(path) => io::read_trades_csv(path, args.tick_size)?,
        None => Vec::new(),
    };
    let log = EventLog { records, trades };

    std::fs::create_dir_all(&args.out).map_err(|source| HarnessError::Io {
        path: args.out.clone(),
        source,
    })?;

    let mids = stats::sample_midprice(&log, args.delta, args.burn_in, args.horizon, args.p_ref)?;
    let returns = stats::log_returns(&mids)?;
    let return_acf = stats::autocorrelation(&returns.values, args.return_max_lag)?;
    let abs_acf = stats::abs_return_acf(&returns, args.return_max_lag)?;
    io::write_acf_csv(&args.out.join("return_acf.csv"), &[(args.realization, &return_acf)])?;
    io::write_acf_csv(&args.out.join("abs_return_acf.csv"), &[(args.realization, &abs_acf)])?;

    let edges = stats::linear_edges(-args.returns_hist_max, args.returns_hist_max, args.returns_hist_bins);
    let returns_hist = stats::histogram(&returns.values, &edges)?;
    io::write_hist_csv(&args.out.join("returns_hist.csv"), &returns_hist)?;

    let waits = stats::inter_event_times(&log, args.burn_in)?;
    let positive: Vec<f64> = waits.iter().copied().filter(|&w| w > 0.0).collect();
    let waiting_hist = stats::log_binned_histogram(&positive, args.waiting_bins_per_decade)?;
    io::write_hist_csv(&args.out.join("waiting_time_hist.csv"), &waiting_hist)?;

    if args.trades.is_some() {
        let sign_acf = stats::trade_sign_acf(&log, args.sign_max_lag, args.burn_in)?;
        io::write_acf_csv(&args.out.join("sign_acf.csv"), &[(args.realization, &sign_acf)])?;
    }
    eprintln!("wrote statistics for {} to {}", args.log.display(), args.out.display());
    Ok(())
}

fn compare_command(args: CompareArgs) -> Result<(), HarnessError> {
    let results: Vec<ScenarioResult> = args
        .dirs
        .iter()
        .map(|dir| ScenarioResult::load(dir))
        .collect::<Result<_, _>>()?;
    let comparison = super::compare_scenarios(&results)?;
    comparison.write(&args.out)?;
    eprintln!(
        "compared {} scenarios into {}",
        results.len(),
        args.out.display()
    );
    Ok(())
}

fn network_command(args: NetworkArgs) -> Result<(), HarnessError> {
    use super::NetworkSpec;
    let (spec, n) = match args.kind.as_str() {
        "lattice" => (
            NetworkSpec::LatticeX { rows: args.rows, cols: args.cols },
            args.rows * args.cols,
        ),
        "er" => (NetworkSpec::ErdosRenyi { edges: args.edges }, args.n),
        "ba" => (NetworkSpec::BarabasiAlbert { attach: args.attach }, args.n),
        other => {
            return Err(HarnessError::Config(config::ConfigError::Validation(format!(
                "network kind must be lattice, er or ba, got '{other}'"
            ))))
        }
    };
    let graph = super::build_network(spec, n, args.seed)
        .map_err(|source| HarnessError::Network { seed: args.seed, source })?
        .expect("spec is never None here");
    let file = std::fs::File::create(&args.export).map_err(|source| HarnessError::Io {
        path: args.export.clone(),
        source,
    })?;
    graph
        .write_edge_list(std::io::BufWriter::new(file))
        .map_err(|source| HarnessError::Io { path: args.export.clone(), source })?;
    eprintln!(
        "wrote {} ({} nodes, {} edges) to {}",
        args.kind,
        graph.node_count(),
        graph.edge_count(),
        args.export.display()
    );
    let _ = kernel::NETWORK_STREAM_OFFSET; // stream convention documented in kernel
    Ok(())
}

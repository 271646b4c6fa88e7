//! Scenario orchestration: load a configuration, run its realizations
//! (optionally in parallel), persist event logs, aggregate statistics
//! — distributions pool counts across realizations, autocorrelations
//! average per lag — and emit plot-ready CSV files. Outputs are a pure
//! function of the configuration: rerunning a config reproduces every
//! output byte.

pub mod cli;
pub mod config;
pub mod io;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use cli::cli;
pub use config::{echo_config, load_config, parse_config, ConfigError, NetworkSpec, RunConfig, StatsOptions};
pub use io::{DataError, RealizationSummary};

use crate::kernel::{self, EventLog, SimConfig, Topology, NETWORK_STREAM_OFFSET};
use crate::network::{build_barabasi_albert, build_erdos_renyi, build_lattice_x, Graph, NetworkError};
use crate::stats::{
    self, average_acf, excess_kurtosis, histogram, linear_edges, log_edges, loglog_linear_fit,
    pool_histograms, semilogy_linear_fit, survival_at, AcfResult, Histogram, StatsError,
};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("realization with seed {seed}: {source}")]
    Network {
        seed: u64,
        #[source]
        source: NetworkError,
    },
    #[error("realization with seed {seed}: {source}")]
    Run {
        seed: u64,
        #[source]
        source: kernel::RunError,
    },
    #[error("realization with seed {seed}: {source}")]
    Stats {
        seed: u64,
        #[source]
        source: StatsError,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("incompatible statistics options: {0}")]
    IncompatibleStats(String),
    #[error(transparent)]
    StatsComputation(#[from] StatsError),
}

impl HarnessError {
    /// CLI exit code: 1 for usage/config problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// Build the topology a realization interacts on. Random kinds draw
/// from the realization seed's dedicated network substream, so each
/// realization gets its own network.
pub fn build_network(spec: NetworkSpec, n_agents: u32, seed: u64) -> Result<Option<Graph>, NetworkError> {
    let mut rng = kernel::substream(seed, n_agents as u64 + NETWORK_STREAM_OFFSET);
    let graph = match spec {
        NetworkSpec::None => None,
        NetworkSpec::LatticeX { rows, cols } => Some(build_lattice_x(rows, cols)?),
        NetworkSpec::ErdosRenyi { edges } => Some(build_erdos_renyi(n_agents, edges, &mut rng)?),
        NetworkSpec::BarabasiAlbert { attach } => Some(build_barabasi_albert(n_agents, attach, &mut rng)?),
    };
    Ok(graph)
}

/// Everything one realization contributes to aggregation.
struct RealizationOutput {
    summary: RealizationSummary,
    returns: Vec<f64>,
    waits: Vec<f64>,
    return_acf: AcfResult,
    abs_acf: AcfResult,
    sign_acf: AcfResult,
    cascade_sizes: Vec<u64>,
    log_path: Option<PathBuf>,
}

/// Aggregated scenario outputs plus where everything was written.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub label: String,
    pub out_dir: PathBuf,
    pub log_paths: Vec<PathBuf>,
    pub per_realization: Vec<RealizationSummary>,
    pub returns_hist: Histogram,
    pub waiting_hist: Histogram,
    pub cascade_hist: Histogram,
    pub return_acf_mean: AcfResult,
    pub abs_return_acf_mean: AcfResult,
    pub sign_acf_mean: AcfResult,
    pub summary: Vec<(String, f64)>,
    pub stats: StatsOptions,
}

impl ScenarioResult {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|(m, _)| m == name).map(|&(_, v)| v)
    }
}

/// Cascade sizes (source plus follow-ups) of every cascade whose source
/// action fired at or after `burn_in`.
pub fn cascade_sizes(log: &EventLog, burn_in: f64) -> Vec<u64> {
    use std::collections::HashMap;
    let mut sizes: HashMap<u64, u64> = HashMap::new();
    let mut order: Vec<u64> = Vec::new();
    for r in &log.records {
        let Some(id) = r.cascade_id else { continue };
        if r.cascade_depth == Some(0) {
            if r.time >= burn_in {
                sizes.insert(id, 1);
                order.push(id);
            }
        } else if let Some(count) = sizes.get_mut(&id) {
            *count += 1;
        }
    }
    order.into_iter().map(|id| sizes[&id]).collect()
}

fn run_realization(config: &RunConfig, index: u32) -> Result<RealizationOutput, HarnessError> {
    let seed = config.sim.seed.wrapping_add(index as u64);
    let started = std::time::Instant::now();
    let graph = build_network(config.network, config.sim.n_agents, seed)
        .map_err(|source| HarnessError::Network { seed, source })?;
    let sim_config = SimConfig { seed, ..config.sim.clone() };
    let log = kernel::run(&sim_config, graph.as_ref().map(|g| g as &dyn Topology))
        .map_err(|source| HarnessError::Run { seed, source })?;

    let mut log_path = None;
    let realization_dir = config.out_dir.join(format!("realization_{index}"));
    if config.write_events || (config.export_network && graph.is_some()) {
        std::fs::create_dir_all(&realization_dir).map_err(|source| HarnessError::Io {
            path: realization_dir.clone(),
            source,
        })?;
    }
    if config.write_events {
        let events = realization_dir.join("events.csv");
        io::write_events_csv(&events, &log, config.sim.tick_size)?;
        io::write_trades_csv(&realization_dir.join("trades.csv"), &log.trades, config.sim.tick_size)?;
        log_path = Some(events);
    }
    if config.export_network {
        if let Some(graph) = &graph {
            let path = realization_dir.join("network.csv");
            let file = std::fs::File::create(&path)
                .map_err(|source| HarnessError::Io { path: path.clone(), source })?;
            graph
                .write_edge_list(std::io::BufWriter::new(file))
                .map_err(|source| HarnessError::Io { path, source })?;
        }
    }

    let stats_err = |source| HarnessError::Stats { seed, source };
    let s = &config.stats;
    let mids = stats::sample_midprice(
        &log,
        s.delta,
        config.sim.burn_in,
        config.sim.horizon,
        config.sim.reference_price,
    )
    .map_err(stats_err)?;
    let returns = stats::log_returns(&mids).map_err(stats_err)?;
    let return_acf = stats::autocorrelation(&returns.values, s.return_acf_max_lag).map_err(stats_err)?;
    let abs_acf = stats::abs_return_acf(&returns, s.return_acf_max_lag).map_err(stats_err)?;
    let sign_acf = stats::trade_sign_acf(&log, s.sign_acf_max_lag, config.sim.burn_in).map_err(stats_err)?;
    let waits = stats::inter_event_times(&log, config.sim.burn_in).map_err(stats_err)?;
    let cascades = cascade_sizes(&log, config.sim.burn_in);

    let summary = RealizationSummary {
        index,
        seed,
        events: log.records.len() as u64,
        trades: log.trades.len() as u64,
        followups: log.records.iter().filter(|r| r.action.is_follow_up()).count() as u64,
        max_cascade: cascades.iter().copied().max().unwrap_or(0),
    };
    eprintln!(
        "[{}] realization {index} (seed {seed}): {} events, {} trades, {} follow-ups in {:.1?}",
        config.label,
        summary.events,
        summary.trades,
        summary.followups,
        started.elapsed()
    );
    Ok(RealizationOutput {
        summary,
        returns: returns.values,
        waits,
        return_acf,
        abs_acf,
        sign_acf,
        cascade_sizes: cascades,
        log_path,
    })
}

/// Run every realization of a scenario and aggregate. Realizations are
/// isolated (own seed, own network, own world); `jobs > 1` runs them on
/// a thread pool without changing any output byte.
pub fn run_scenario(config: &RunConfig) -> Result<ScenarioResult, HarnessError> {
    config::validate(config)?;
    std::fs::create_dir_all(&config.out_dir).map_err(|source| HarnessError::Io {
        path: config.out_dir.clone(),
        source,
    })?;

    let indices: Vec<u32> = (0..config.realizations).collect();
    let outputs: Vec<RealizationOutput> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs as usize)
            .build()
            .expect("thread pool construction");
        pool.install(|| {
            indices
                .par_iter()
                .map(|&i| run_realization(config, i))
                .collect::<Result<Vec<_>, _>>()
        })?
    } else {
        indices
            .iter()
            .map(|&i| run_realization(config, i))
            .collect::<Result<Vec<_>, _>>()?
    };

    aggregate_and_write(config, outputs)
}

fn aggregate_and_write(
    config: &RunConfig,
    outputs: Vec<RealizationOutput>,
) -> Result<ScenarioResult, HarnessError> {
    let s = &config.stats;

    // Returns: pooled histogram on the configured symmetric grid.
    let return_edges = linear_edges(-s.returns_hist_max, s.returns_hist_max, s.returns_hist_bins);
    let return_hists: Vec<Histogram> = outputs
        .iter()
        .map(|o| histogram(&o.returns, &return_edges))
        .collect::<Result<_, _>>()?;
    let returns_hist = pool_histograms(&return_hists)?;

    // Waiting times: shared log grid over the pooled positive range.
    // Exact zero gaps (simultaneous events) cannot be log-binned; count
    // them separately.
    let mut zero_gaps = 0u64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for o in &outputs {
        for &w in &o.waits {
            if w > 0.0 {
                lo = lo.min(w);
                hi = hi.max(w);
            } else {
                zero_gaps += 1;
            }
        }
    }
    if !lo.is_finite() {
        return Err(HarnessError::IncompatibleStats(
            "no positive inter-event times to bin".to_string(),
        ));
    }
    let wait_edges = log_edges(lo, hi, s.waiting_bins_per_decade);
    let wait_hists: Vec<Histogram> = outputs
        .iter()
        .map(|o| {
            let positive: Vec<f64> = o.waits.iter().copied().filter(|&w| w > 0.0).collect();
            histogram(&positive, &wait_edges)
        })
        .collect::<Result<_, _>>()?;
    let waiting_hist = pool_histograms(&wait_hists)?;

    // Cascade sizes: one integer-wide bin per size.
    let max_cascade = outputs
        .iter()
        .flat_map(|o| o.cascade_sizes.iter().copied())
        .max()
        .unwrap_or(1);
    let cascade_edges: Vec<f64> = (1..=max_cascade + 1).map(|k| k as f64).collect();
    let cascade_hists: Vec<Histogram> = outputs
        .iter()
        .map(|o| {
            let sizes: Vec<f64> = o.cascade_sizes.iter().map(|&c| c as f64).collect();
            histogram(&sizes, &cascade_edges)
        })
        .collect::<Result<_, _>>()?;
    let cascade_hist = pool_histograms(&cascade_hists)?;

    let return_acfs: Vec<AcfResult> = outputs.iter().map(|o| o.return_acf.clone()).collect();
    let abs_acfs: Vec<AcfResult> = outputs.iter().map(|o| o.abs_acf.clone()).collect();
    let sign_acfs: Vec<AcfResult> = outputs.iter().map(|o| o.sign_acf.clone()).collect();
    let return_acf_mean = average_acf(&return_acfs)?;
    let abs_return_acf_mean = average_acf(&abs_acfs)?;
    let sign_acf_mean = average_acf(&sign_acfs)?;

    let pooled_returns: Vec<f64> = outputs.iter().flat_map(|o| o.returns.iter().copied()).collect();
    let pooled_waits: Vec<f64> = outputs.iter().flat_map(|o| o.waits.iter().copied()).collect();
    let mean_wait = pooled_waits.iter().sum::<f64>() / pooled_waits.len() as f64;
    let survival_10x = survival_at(&pooled_waits, 10.0 * mean_wait);

    let sign_points: Vec<(f64, f64)> = sign_acf_mean
        .values
        .iter()
        .enumerate()
        .skip(1)
        .map(|(lag, &v)| (lag as f64, v))
        .collect();
    let sign_slope = loglog_linear_fit(&sign_points, s.sign_fit_lo, s.sign_fit_hi)
        .map(|fit| fit.slope)
        .unwrap_or(f64::NAN);
    let wait_points: Vec<(f64, f64)> = (0..waiting_hist.counts.len())
        .map(|i| (waiting_hist.bin_center(i), waiting_hist.density(i)))
        .collect();
    let wait_slope = semilogy_linear_fit(&wait_points, mean_wait, 10.0 * mean_wait)
        .map(|fit| fit.slope)
        .unwrap_or(f64::NAN);

    let (_, returns_std) = stats::gaussian_moment_fit(&pooled_returns)?;
    let events_total: u64 = outputs.iter().map(|o| o.summary.events).sum();
    let trades_total: u64 = outputs.iter().map(|o| o.summary.trades).sum();
    let followups_total: u64 = outputs.iter().map(|o| o.summary.followups).sum();
    let fit_lo = s.sign_fit_lo as usize;
    let fit_hi = s.sign_fit_hi as usize;
    let sign_acf_fit_mean = sign_acf_mean.values[fit_lo..=fit_hi].iter().sum::<f64>()
        / (fit_hi - fit_lo + 1) as f64;

    let summary: Vec<(String, f64)> = vec![
        ("events_total".into(), events_total as f64),
        ("trades_total".into(), trades_total as f64),
        ("followups_total".into(), followups_total as f64),
        ("mean_inter_event".into(), mean_wait),
        ("zero_gaps".into(), zero_gaps as f64),
        ("excess_kurtosis".into(), excess_kurtosis(&pooled_returns)?),
        ("returns_std".into(), returns_std),
        ("sign_acf_mean_fit_range".into(), sign_acf_fit_mean),
        ("sign_acf_loglog_slope".into(), sign_slope),
        ("abs_acf_lag1".into(), abs_return_acf_mean.value(1)),
        ("waiting_survival_10x".into(), survival_10x),
        (
            "waiting_tail_ratio_vs_exp".into(),
            survival_10x / (-10.0f64).exp(),
        ),
        ("waiting_semilog_slope".into(), wait_slope),
    ];

    // Persist aggregates.
    let dir = &config.out_dir;
    std::fs::write(dir.join("config.txt"), echo_config(config)).map_err(|source| {
        HarnessError::Io { path: dir.join("config.txt"), source }
    })?;
    let meta = format!(
        "tool = lobnet\nversion = {}\nlabel = {}\nrealizations = {}\nbase_seed = {}\n",
        env!("CARGO_PKG_VERSION"),
        config.label,
        config.realizations,
        config.sim.seed,
    );
    std::fs::write(dir.join("meta.txt"), meta).map_err(|source| HarnessError::Io {
        path: dir.join("meta.txt"),
        source,
    })?;

    let summaries: Vec<RealizationSummary> = outputs.iter().map(|o| o.summary.clone()).collect();
    io::write_realizations_csv(&dir.join("realizations.csv"), &summaries)?;
    io::write_hist_csv(&dir.join("returns_hist.csv"), &returns_hist)?;
    io::write_hist_csv(&dir.join("waiting_time_hist.csv"), &waiting_hist)?;
    io::write_hist_csv(&dir.join("cascade_hist.csv"), &cascade_hist)?;

    let indexed = |acfs: &[AcfResult]| -> Vec<(u32, AcfResult)> {
        acfs.iter()
            .enumerate()
            .map(|(i, a)| (i as u32, a.clone()))
            .collect()
    };
    for (name, acfs, mean) in [
        ("return_acf", &return_acfs, &return_acf_mean),
        ("abs_return_acf", &abs_acfs, &abs_return_acf_mean),
        ("sign_acf", &sign_acfs, &sign_acf_mean),
    ] {
        let curves = indexed(acfs);
        let refs: Vec<(u32, &AcfResult)> = curves.iter().map(|(i, a)| (*i, a)).collect();
        io::write_acf_csv(&dir.join(format!("{name}.csv")), &refs)?;
        io::write_acf_mean_csv(&dir.join(format!("{name}_mean.csv")), mean)?;
    }

    let summary_rows: Vec<(String, String, f64)> = summary
        .iter()
        .map(|(metric, value)| (config.label.clone(), metric.clone(), *value))
        .collect();
    io::write_summary_csv(&dir.join("summary.csv"), &summary_rows)?;

    Ok(ScenarioResult {
        label: config.label.clone(),
        out_dir: dir.clone(),
        log_paths: outputs.iter().filter_map(|o| o.log_path.clone()).collect(),
        per_realization: summaries,
        returns_hist,
        waiting_hist,
        cascade_hist,
        return_acf_mean,
        abs_return_acf_mean,
        sign_acf_mean,
        summary,
        stats: s.clone(),
    })
}

impl ScenarioResult {
    /// Reload a persisted scenario directory.
    pub fn load(dir: &Path) -> Result<ScenarioResult, HarnessError> {
        let config = load_config(&dir.join("config.txt"))?;
        let per_realization = io::read_realizations_csv(&dir.join("realizations.csv"))?;
        let returns_hist = io::read_hist_csv(&dir.join("returns_hist.csv"))?;
        let waiting_hist = io::read_hist_csv(&dir.join("waiting_time_hist.csv"))?;
        let cascade_hist = io::read_hist_csv(&dir.join("cascade_hist.csv"))?;
        let return_acf_mean = io::read_acf_mean_csv(&dir.join("return_acf_mean.csv"))?;
        let abs_return_acf_mean = io::read_acf_mean_csv(&dir.join("abs_return_acf_mean.csv"))?;
        let sign_acf_mean = io::read_acf_mean_csv(&dir.join("sign_acf_mean.csv"))?;
        let summary = io::read_summary_csv(&dir.join("summary.csv"))?
            .into_iter()
            .filter(|(scenario, _, _)| *scenario == config.label)
            .map(|(_, metric, value)| (metric, value))
            .collect();
        let log_paths = (0..config.realizations)
            .map(|r| dir.join(format!("realization_{r}")).join("events.csv"))
            .filter(|p| p.exists())
            .collect();
        Ok(ScenarioResult {
            label: config.label.clone(),
            out_dir: dir.to_path_buf(),
            log_paths,
            per_realization,
            returns_hist,
            waiting_hist,
            cascade_hist,
            return_acf_mean,
            abs_return_acf_mean,
            sign_acf_mean,
            summary,
            stats: config.stats,
        })
    }
}

/// Long-format alignment of several scenarios plus a per-scenario
/// metric table.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub rows: Vec<(String, &'static str, f64, f64)>,
    pub summary_rows: Vec<(String, String, f64)>,
    pub metrics: Vec<String>,
}

pub fn compare_scenarios(results: &[ScenarioResult]) -> Result<Comparison, HarnessError> {
    if results.len() < 2 {
        return Err(HarnessError::IncompatibleStats(
            "need at least two scenario results to compare".to_string(),
        ));
    }
    let first = &results[0];
    for r in results {
        if r.stats.delta != first.stats.delta {
            return Err(HarnessError::IncompatibleStats(format!(
                "sampling interval differs: {} vs {}",
                r.stats.delta, first.stats.delta
            )));
        }
        if r.return_acf_mean.values.len() != first.return_acf_mean.values.len()
            || r.sign_acf_mean.values.len() != first.sign_acf_mean.values.len()
        {
            return Err(HarnessError::IncompatibleStats(
                "autocorrelation lag grids differ".to_string(),
            ));
        }
    }

    let mut rows = Vec::new();
    for r in results {
        for (diag, hist) in [
            ("returns_hist", &r.returns_hist),
            ("waiting_hist", &r.waiting_hist),
            ("cascade_hist", &r.cascade_hist),
        ] {
            for i in 0..hist.counts.len() {
                rows.push((r.label.clone(), diag, hist.bin_center(i), hist.density(i)));
            }
        }
        for (diag, acf) in [
            ("return_acf", &r.return_acf_mean),
            ("abs_return_acf", &r.abs_return_acf_mean),
            ("sign_acf", &r.sign_acf_mean),
        ] {
            for (lag, &value) in acf.values.iter().enumerate() {
                rows.push((r.label.clone(), diag, lag as f64, value));
            }
        }
    }

    let metrics: Vec<String> = first.summary.iter().map(|(m, _)| m.clone()).collect();
    let mut summary_rows = Vec::new();
    for r in results {
        for (metric, value) in &r.summary {
            summary_rows.push((r.label.clone(), metric.clone(), *value));
        }
    }
    Ok(Comparison { rows, summary_rows, metrics })
}

impl Comparison {
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        io::write_comparison_csv(&dir.join("comparison.csv"), &self.rows)?;
        io::write_summary_csv(&dir.join("summary.csv"), &self.summary_rows)?;

        // Wide table: one row per scenario, one column per metric.
        let path = dir.join("summary_table.csv");
        let mut text = String::from("scenario");
        for m in &self.metrics {
            text.push(',');
            text.push_str(m);
        }
        text.push('\n');
        let mut scenarios: Vec<String> = Vec::new();
        for (scenario, _, _) in &self.summary_rows {
            if !scenarios.contains(scenario) {
                scenarios.push(scenario.clone());
            }
        }
        for scenario in &scenarios {
            text.push_str(scenario);
            for metric in &self.metrics {
                let value = self
                    .summary_rows
                    .iter()
                    .find(|(s, m, _)| s == scenario && m == metric)
                    .map(|&(_, _, v)| v)
                    .unwrap_or(f64::NAN);
                text.push(',');
                text.push_str(&value.to_string());
            }
            text.push('\n');
        }
        std::fs::write(&path, text).map_err(|source| HarnessError::Io { path, source })?;
        Ok(())
    }
}

//! Flat key-value run configuration: one `key = value` pair per line,
//! `#` comments, unknown keys rejected. Every key has a default, so an
//! empty file is a valid no-interaction run and `network = ba` alone
//! selects the scale-free scenario at standard parameters. The echoed
//! config written next to results reparses to an identical `RunConfig`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::kernel::SimConfig;
use crate::network::NetworkKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

/// Which topology to build, with its generator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkSpec {
    None,
    LatticeX { rows: u32, cols: u32 },
    ErdosRenyi { edges: u64 },
    BarabasiAlbert { attach: u32 },
}

impl NetworkSpec {
    pub fn kind(&self) -> NetworkKind {
        match self {
            NetworkSpec::None => NetworkKind::None,
            NetworkSpec::LatticeX { .. } => NetworkKind::LatticeX,
            NetworkSpec::ErdosRenyi { .. } => NetworkKind::ErdosRenyi,
            NetworkSpec::BarabasiAlbert { .. } => NetworkKind::BarabasiAlbert,
        }
    }
}

/// Statistics options shared by in-run computation and recomputation
/// from persisted logs.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsOptions {
    /// Mid-price sampling interval (time units).
    pub delta: f64,
    pub return_acf_max_lag: usize,
    pub sign_acf_max_lag: usize,
    pub returns_hist_bins: usize,
    /// Returns histogram spans [-returns_hist_max, returns_hist_max].
    pub returns_hist_max: f64,
    pub waiting_bins_per_decade: u32,
    /// Lag range of the log-log fit to the sign autocorrelation.
    pub sign_fit_lo: f64,
    pub sign_fit_hi: f64,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            delta: 50.0,
            return_acf_max_lag: 500,
            sign_acf_max_lag: 300,
            returns_hist_bins: 401,
            returns_hist_max: 0.02,
            waiting_bins_per_decade: 10,
            sign_fit_lo: 1.0,
            sign_fit_hi: 50.0,
        }
    }
}

/// A full scenario: simulation parameters, topology, realization count
/// and seeds, statistics options, and output handling.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub label: String,
    pub network: NetworkSpec,
    /// `sim.seed` is the base seed; realization r runs with base + r.
    pub sim: SimConfig,
    pub realizations: u32,
    pub stats: StatsOptions,
    pub out_dir: PathBuf,
    pub jobs: u32,
    pub export_network: bool,
    pub write_events: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            label: String::new(),
            network: NetworkSpec::None,
            sim: SimConfig { seed: 1, ..SimConfig::default() },
            realizations: 5,
            stats: StatsOptions::default(),
            out_dir: PathBuf::from("out"),
            jobs: 1,
            export_network: true,
            write_events: true,
        }
    }
}

/// Raw keys before validation; network parameters are kept regardless
/// of the selected kind so configs stay composable.
#[derive(Debug, Clone)]
struct RawConfig {
    label: Option<String>,
    network: NetworkKind,
    rows: u32,
    cols: u32,
    edges: u64,
    attach: u32,
    config: RunConfig,
    max_events: Option<u64>,
}

impl Default for RawConfig {
    fn default() -> Self {
        RawConfig {
            label: None,
            network: NetworkKind::None,
            rows: 25,
            cols: 40,
            edges: 4000,
            attach: 4,
            config: RunConfig::default(),
            max_events: None,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut raw = RawConfig::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.split_once('#') {
            Some((before, _)) => before.trim(),
            None => raw_line.trim(),
        };
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: line_no,
            msg: format!("expected 'key = value', got '{line}'"),
        })?;
        apply_key(&mut raw, key.trim(), value.trim(), line_no)?;
    }
    finish(raw)
}

fn parse_as<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("cannot parse value '{value}' for key '{key}'"),
    })
}

fn apply_key(raw: &mut RawConfig, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
    let c = &mut raw.config;
    match key {
        "label" => raw.label = Some(value.to_string()),
        "network" => {
            raw.network = NetworkKind::parse(value).ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("network must be one of none|lattice|er|ba, got '{value}'"),
            })?
        }
        "rows" => raw.rows = parse_as(value, line, key)?,
        "cols" => raw.cols = parse_as(value, line, key)?,
        "edges" => raw.edges = parse_as(value, line, key)?,
        "attach" => raw.attach = parse_as(value, line, key)?,
        "agents" => c.sim.n_agents = parse_as(value, line, key)?,
        "q" => c.sim.q = parse_as(value, line, key)?,
        "lambda_market" => c.sim.agents.lambda_market = parse_as(value, line, key)?,
        "lambda_limit" => c.sim.agents.lambda_limit = parse_as(value, line, key)?,
        "lambda_cancel" => c.sim.agents.lambda_cancel = parse_as(value, line, key)?,
        "lambda_follow" => c.sim.agents.lambda_follow = parse_as(value, line, key)?,
        "mean_volume" => c.sim.agents.mean_volume = parse_as(value, line, key)?,
        "stddev_volume" => c.sim.agents.stddev_volume = parse_as(value, line, key)?,
        "price_dispersion" => c.sim.agents.price_dispersion = parse_as(value, line, key)?,
        "tick_size" => c.sim.tick_size = parse_as(value, line, key)?,
        "reference_price" => c.sim.reference_price = parse_as(value, line, key)?,
        "horizon" => c.sim.horizon = parse_as(value, line, key)?,
        "burn_in" => c.sim.burn_in = parse_as(value, line, key)?,
        "seed" => c.sim.seed = parse_as(value, line, key)?,
        "max_events" => raw.max_events = Some(parse_as(value, line, key)?),
        "realizations" => c.realizations = parse_as(value, line, key)?,
        "delta" => c.stats.delta = parse_as(value, line, key)?,
        "return_acf_max_lag" => c.stats.return_acf_max_lag = parse_as(value, line, key)?,
        "sign_acf_max_lag" => c.stats.sign_acf_max_lag = parse_as(value, line, key)?,
        "returns_hist_bins" => c.stats.returns_hist_bins = parse_as(value, line, key)?,
        "returns_hist_max" => c.stats.returns_hist_max = parse_as(value, line, key)?,
        "waiting_bins_per_decade" => c.stats.waiting_bins_per_decade = parse_as(value, line, key)?,
        "sign_fit_lo" => c.stats.sign_fit_lo = parse_as(value, line, key)?,
        "sign_fit_hi" => c.stats.sign_fit_hi = parse_as(value, line, key)?,
        "out" => c.out_dir = PathBuf::from(value),
        "jobs" => c.jobs = parse_as(value, line, key)?,
        "export_network" => c.export_network = parse_as(value, line, key)?,
        "write_events" => c.write_events = parse_as(value, line, key)?,
        _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
    }
    Ok(())
}

fn finish(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let mut config = raw.config;
    config.sim.max_events = raw.max_events;
    config.network = match raw.network {
        NetworkKind::None => NetworkSpec::None,
        NetworkKind::LatticeX => NetworkSpec::LatticeX { rows: raw.rows, cols: raw.cols },
        NetworkKind::ErdosRenyi => NetworkSpec::ErdosRenyi { edges: raw.edges },
        NetworkKind::BarabasiAlbert => NetworkSpec::BarabasiAlbert { attach: raw.attach },
    };
    config.label = raw
        .label
        .unwrap_or_else(|| raw.network.label().to_string());
    validate(&config)?;
    Ok(config)
}

pub fn validate(config: &RunConfig) -> Result<(), ConfigError> {
    let invalid = |msg: String| Err(ConfigError::Validation(msg));
    if config.label.is_empty()
        || !config
            .label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return invalid(format!(
            "label '{}' must be non-empty and use only [A-Za-z0-9_-]",
            config.label
        ));
    }
    config
        .sim
        .validate()
        .map_err(|e| ConfigError::Validation(e.to_string()))?;
    let n = config.sim.n_agents;
    match config.network {
        NetworkSpec::None => {}
        NetworkSpec::LatticeX { rows, cols } => {
            if rows < 3 || cols < 3 {
                return invalid(format!("lattice dimensions must be at least 3x3, got {rows}x{cols}"));
            }
            if rows as u64 * cols as u64 != n as u64 {
                return invalid(format!(
                    "lattice dimensions {rows}x{cols} do not cover agents = {n}"
                ));
            }
        }
        NetworkSpec::ErdosRenyi { edges } => {
            let max = n as u64 * (n as u64 - 1) / 2;
            if edges > max {
                return invalid(format!("edges = {edges} exceeds the {max} possible pairs"));
            }
        }
        NetworkSpec::BarabasiAlbert { attach } => {
            if attach < 1 || attach >= n {
                return invalid(format!("attach = {attach} must satisfy 1 <= attach < agents = {n}"));
            }
        }
    }
    if config.realizations < 1 {
        return invalid("realizations must be at least 1".to_string());
    }
    if config.jobs < 1 {
        return invalid("jobs must be at least 1".to_string());
    }
    let s = &config.stats;
    if !(s.delta > 0.0) {
        return invalid(format!("delta must be strictly positive, got {}", s.delta));
    }
    if s.return_acf_max_lag < 1 || s.sign_acf_max_lag < 1 {
        return invalid("acf max lags must be at least 1".to_string());
    }
    let samples = ((config.sim.horizon - config.sim.burn_in) / s.delta).floor() as usize;
    if samples < s.return_acf_max_lag + 2 {
        return invalid(format!(
            "horizon, burn_in and delta leave only {samples} mid-price samples, fewer than return_acf_max_lag + 2"
        ));
    }
    if s.returns_hist_bins < 1 || !(s.returns_hist_max > 0.0) {
        return invalid("returns histogram needs at least 1 bin and a positive range".to_string());
    }
    if s.waiting_bins_per_decade < 1 {
        return invalid("waiting_bins_per_decade must be at least 1".to_string());
    }
    if !(s.sign_fit_lo >= 1.0) || !(s.sign_fit_hi > s.sign_fit_lo) || s.sign_fit_hi > s.sign_acf_max_lag as f64 {
        return invalid(format!(
            "sign fit range [{}, {}] must satisfy 1 <= lo < hi <= sign_acf_max_lag",
            s.sign_fit_lo, s.sign_fit_hi
        ));
    }
    if config.sim.max_events == Some(0) {
        return invalid("max_events must be at least 1 when set".to_string());
    }
    Ok(())
}

/// Render the effective configuration in the input format; parsing the
/// result reproduces the config exactly.
pub fn echo_config(config: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "label = {}", config.label);
    let _ = writeln!(s, "network = {}", config.network.kind().label());
    let (rows, cols, edges, attach) = network_params(config);
    let _ = writeln!(s, "rows = {rows}");
    let _ = writeln!(s, "cols = {cols}");
    let _ = writeln!(s, "edges = {edges}");
    let _ = writeln!(s, "attach = {attach}");
    let _ = writeln!(s, "agents = {}", config.sim.n_agents);
    let _ = writeln!(s, "q = {}", config.sim.q);
    let _ = writeln!(s, "lambda_market = {}", config.sim.agents.lambda_market);
    let _ = writeln!(s, "lambda_limit = {}", config.sim.agents.lambda_limit);
    let _ = writeln!(s, "lambda_cancel = {}", config.sim.agents.lambda_cancel);
    let _ = writeln!(s, "lambda_follow = {}", config.sim.agents.lambda_follow);
    let _ = writeln!(s, "mean_volume = {}", config.sim.agents.mean_volume);
    let _ = writeln!(s, "stddev_volume = {}", config.sim.agents.stddev_volume);
    let _ = writeln!(s, "price_dispersion = {}", config.sim.agents.price_dispersion);
    let _ = writeln!(s, "tick_size = {}", config.sim.tick_size);
    let _ = writeln!(s, "reference_price = {}", config.sim.reference_price);
    let _ = writeln!(s, "horizon = {}", config.sim.horizon);
    let _ = writeln!(s, "burn_in = {}", config.sim.burn_in);
    let _ = writeln!(s, "seed = {}", config.sim.seed);
    if let Some(cap) = config.sim.max_events {
        let _ = writeln!(s, "max_events = {cap}");
    }
    let _ = writeln!(s, "realizations = {}", config.realizations);
    let _ = writeln!(s, "delta = {}", config.stats.delta);
    let _ = writeln!(s, "return_acf_max_lag = {}", config.stats.return_acf_max_lag);
    let _ = writeln!(s, "sign_acf_max_lag = {}", config.stats.sign_acf_max_lag);
    let _ = writeln!(s, "returns_hist_bins = {}", config.stats.returns_hist_bins);
    let _ = writeln!(s, "returns_hist_max = {}", config.stats.returns_hist_max);
    let _ = writeln!(s, "waiting_bins_per_decade = {}", config.stats.waiting_bins_per_decade);
    let _ = writeln!(s, "sign_fit_lo = {}", config.stats.sign_fit_lo);
    let _ = writeln!(s, "sign_fit_hi = {}", config.stats.sign_fit_hi);
    // The output location is where the echo sits, not part of the
    // scenario; omitting it keeps result trees byte-comparable.
    let _ = writeln!(s, "jobs = {}", config.jobs);
    let _ = writeln!(s, "export_network = {}", config.export_network);
    let _ = writeln!(s, "write_events = {}", config.write_events);
    s
}

fn network_params(config: &RunConfig) -> (u32, u32, u64, u32) {
    let d = RawConfig::default();
    match config.network {
        NetworkSpec::None => (d.rows, d.cols, d.edges, d.attach),
        NetworkSpec::LatticeX { rows, cols } => (rows, cols, d.edges, d.attach),
        NetworkSpec::ErdosRenyi { edges } => (d.rows, d.cols, edges, d.attach),
        NetworkSpec::BarabasiAlbert { attach } => (d.rows, d.cols, d.edges, attach),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_applies_defaults() {
        let config = parse_config("network = ba\n").unwrap();
        assert_eq!(config.label, "ba");
        assert_eq!(config.network, NetworkSpec::BarabasiAlbert { attach: 4 });
        assert_eq!(config.sim.n_agents, 1000);
        assert_eq!(config.sim.q, 0.0625);
        assert_eq!(config.sim.horizon, 720_000.0);
        assert_eq!(config.sim.burn_in, 72_000.0);
        assert_eq!(config.sim.tick_size, 0.01);
        assert_eq!(config.sim.agents.lambda_limit, 5_000.0);
        assert_eq!(config.sim.agents.lambda_market, 20_000.0);
        assert_eq!(config.realizations, 5);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# scenario\nnetwork = lattice # modified square lattice\n\nrows = 25\ncols = 40\n";
        let config = parse_config(text).unwrap();
        assert_eq!(config.network, NetworkSpec::LatticeX { rows: 25, cols: 40 });
    }

    #[test]
    fn q_out_of_range_is_rejected() {
        let err = parse_config("q = 1.5\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)), "{err}");
        assert!(err.to_string().contains('q'));
    }

    #[test]
    fn burn_in_past_horizon_is_rejected() {
        let err = parse_config("burn_in = 800000\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)), "{err}");
    }

    #[test]
    fn unknown_keys_fail_fast() {
        let err = parse_config("network = ba\nspeed = 11\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { line, key } => {
                assert_eq!(line, 2);
                assert_eq!(key, "speed");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_lines_report_position() {
        let err = parse_config("network\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
        let err = parse_config("agents = lots\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
    }

    #[test]
    fn lattice_must_cover_the_agents() {
        let err = parse_config("network = lattice\nrows = 10\ncols = 10\n").unwrap_err();
        assert!(err.to_string().contains("do not cover"), "{err}");
    }

    #[test]
    fn echo_round_trips() {
        let text = "network = er\nedges = 2000\nagents = 500\nq = 0.25\nseed = 9\nmax_events = 1000000\nout = results/er\nlabel = er-q25\n";
        let config = parse_config(text).unwrap();
        let echoed = echo_config(&config);
        // The echo deliberately omits the output location.
        let mut back = parse_config(&echoed).unwrap();
        back.out_dir = config.out_dir.clone();
        assert_eq!(back, config);

        let default_echo = echo_config(&parse_config("").unwrap());
        assert_eq!(parse_config(&default_echo).unwrap(), parse_config("").unwrap());
    }
}

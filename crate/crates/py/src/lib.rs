//! Python bindings: the order book, the network generators, and the
//! simulation kernel plus the core statistics, exposed as the `lobnet`
//! extension module. Wrappers are thin; all behavior lives in the core
//! crate.

use pyo3::exceptions::{PyIndexError, PyLookupError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use lobnet_core::book;
use lobnet_core::harness;
use lobnet_core::kernel::{self, Topology};
use lobnet_core::network;
use lobnet_core::stats;

fn parse_side(side: &str) -> PyResult<book::Side> {
    book::Side::parse(side)
        .ok_or_else(|| PyValueError::new_err(format!("side must be 'bid' or 'ask', got '{side}'")))
}

fn value_err<E: std::fmt::Display>(err: E) -> PyErr {
    PyValueError::new_err(err.to_string())
}

type TradeTuple = (f64, u64, u64, &'static str, u64, u32);

fn trade_tuple(t: &book::Trade) -> TradeTuple {
    (
        t.time,
        t.price.0,
        t.volume,
        t.aggressor_side.label(),
        t.maker_order.0,
        t.taker_agent,
    )
}

/// Price-time-priority order book over integer tick prices.
#[pyclass]
struct OrderBook {
    inner: book::OrderBook,
}

#[pymethods]
impl OrderBook {
    #[new]
    #[pyo3(signature = (tick_size = 0.01))]
    fn new(tick_size: f64) -> PyResult<Self> {
        if !(tick_size > 0.0) {
            return Err(PyValueError::new_err("tick_size must be positive"));
        }
        Ok(OrderBook { inner: book::OrderBook::new(tick_size) })
    }

    #[getter]
    fn tick_size(&self) -> f64 {
        self.inner.tick_size()
    }

    /// Returns (trades, resting_order_id). Trades are tuples of
    /// (time, price_ticks, volume, aggressor, maker_order, taker_agent).
    fn submit_limit(
        &mut self,
        agent: u32,
        side: &str,
        price_ticks: u64,
        volume: u64,
        time: f64,
    ) -> PyResult<(Vec<TradeTuple>, Option<u64>)> {
        let report = self
            .inner
            .submit_limit(agent, parse_side(side)?, book::TickPrice(price_ticks), volume, time)
            .map_err(value_err)?;
        Ok((
            report.trades.iter().map(trade_tuple).collect(),
            report.resting_order.map(|id| id.0),
        ))
    }

    /// Returns (trades, discarded_volume).
    fn submit_market(
        &mut self,
        agent: u32,
        side: &str,
        volume: u64,
        time: f64,
    ) -> PyResult<(Vec<TradeTuple>, u64)> {
        let report = self
            .inner
            .submit_market(agent, parse_side(side)?, volume, time)
            .map_err(value_err)?;
        Ok((report.trades.iter().map(trade_tuple).collect(), report.discarded_volume))
    }

    /// Cancels a resting order, returning the cancelled volume.
    fn cancel(&mut self, order_id: u64) -> PyResult<u64> {
        self.inner
            .cancel(book::OrderId(order_id))
            .map_err(|e| PyLookupError::new_err(e.to_string()))
    }

    /// (best_bid_ticks, best_ask_ticks, mid, spread); mid and spread
    /// are in price units and present only for a two-sided book.
    fn quotes(&self) -> (Option<u64>, Option<u64>, Option<f64>, Option<f64>) {
        let q = self.inner.quotes();
        (q.best_bid.map(|p| p.0), q.best_ask.map(|p| p.0), q.mid, q.spread)
    }

    /// Aggregated (side, price_ticks, volume, orders) levels, bids
    /// best-first then asks best-first.
    fn depth(&self) -> Vec<(&'static str, u64, u64, u32)> {
        self.inner
            .depth_snapshot()
            .into_iter()
            .map(|l| (l.side.label(), l.price.0, l.volume, l.orders))
            .collect()
    }

    #[getter]
    fn order_count(&self) -> usize {
        self.inner.order_count()
    }
}

/// Undirected interaction network.
#[pyclass]
struct Graph {
    inner: network::Graph,
}

#[pymethods]
impl Graph {
    /// Diagonal-extended torus lattice; every node has degree 8.
    #[staticmethod]
    fn lattice_x(rows: u32, cols: u32) -> PyResult<Graph> {
        Ok(Graph { inner: network::build_lattice_x(rows, cols).map_err(value_err)? })
    }

    /// G(n, m) with exactly m uniform edges. Uses the same substream
    /// convention as the harness, so the graph matches the network of a
    /// simulation realization run with this seed.
    #[staticmethod]
    fn erdos_renyi(n: u32, m: u64, seed: u64) -> PyResult<Graph> {
        let mut rng = kernel::substream(seed, n as u64 + kernel::NETWORK_STREAM_OFFSET);
        Ok(Graph { inner: network::build_erdos_renyi(n, m, &mut rng).map_err(value_err)? })
    }

    /// Preferential attachment from a complete seed on m_attach + 1 nodes.
    #[staticmethod]
    fn barabasi_albert(n: u32, m_attach: u32, seed: u64) -> PyResult<Graph> {
        let mut rng = kernel::substream(seed, n as u64 + kernel::NETWORK_STREAM_OFFSET);
        Ok(Graph { inner: network::build_barabasi_albert(n, m_attach, &mut rng).map_err(value_err)? })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> u64 {
        self.inner.edge_count()
    }

    fn degree(&self, node: u32) -> PyResult<usize> {
        self.check(node)?;
        Ok(self.inner.degree(node))
    }

    fn neighbors(&self, node: u32) -> PyResult<Vec<u32>> {
        self.check(node)?;
        Ok(self.inner.neighbors(node).to_vec())
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner.edges().to_vec()
    }

    /// Write the sorted "u,v" edge list (u < v, 0-indexed).
    fn write_edge_list(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path)?;
        self.inner.write_edge_list(std::io::BufWriter::new(file))?;
        Ok(())
    }
}

impl Graph {
    fn check(&self, node: u32) -> PyResult<()> {
        if node >= self.inner.node_count() {
            return Err(PyIndexError::new_err(format!(
                "node {node} out of range for {} nodes",
                self.inner.node_count()
            )));
        }
        Ok(())
    }
}

/// Simulation parameters; defaults are the standard experiment values.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct SimConfig {
    inner: kernel::SimConfig,
}

#[pymethods]
impl SimConfig {
    #[new]
    #[pyo3(signature = (
        agents = 1000,
        q = 0.0625,
        lambda_market = 20_000.0,
        lambda_limit = 5_000.0,
        lambda_cancel = 40_000.0,
        lambda_follow = 1_000.0,
        mean_volume = 5.0,
        stddev_volume = 1.5,
        price_dispersion = 2.0,
        tick_size = 0.01,
        reference_price = 100.0,
        horizon = 720_000.0,
        burn_in = 72_000.0,
        seed = 1,
        max_events = None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        agents: u32,
        q: f64,
        lambda_market: f64,
        lambda_limit: f64,
        lambda_cancel: f64,
        lambda_follow: f64,
        mean_volume: f64,
        stddev_volume: f64,
        price_dispersion: f64,
        tick_size: f64,
        reference_price: f64,
        horizon: f64,
        burn_in: f64,
        seed: u64,
        max_events: Option<u64>,
    ) -> PyResult<Self> {
        let inner = kernel::SimConfig {
            n_agents: agents,
            q,
            agents: lobnet_core::agent::AgentParams {
                lambda_market,
                lambda_limit,
                lambda_cancel,
                lambda_follow,
                mean_volume,
                stddev_volume,
                price_dispersion,
            },
            tick_size,
            reference_price,
            horizon,
            burn_in,
            seed,
            max_events,
        };
        inner.validate().map_err(value_err)?;
        Ok(SimConfig { inner })
    }

    #[getter]
    fn agents(&self) -> u32 {
        self.inner.n_agents
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }

    #[getter]
    fn burn_in(&self) -> f64 {
        self.inner.burn_in
    }

    fn __repr__(&self) -> String {
        format!(
            "SimConfig(agents={}, q={}, horizon={}, burn_in={}, seed={})",
            self.inner.n_agents, self.inner.q, self.inner.horizon, self.inner.burn_in, self.inner.seed
        )
    }
}

/// The event log of one realization.
#[pyclass]
struct SimResult {
    log: kernel::EventLog,
    config: kernel::SimConfig,
}

#[pymethods]
impl SimResult {
    #[getter]
    fn num_events(&self) -> usize {
        self.log.records.len()
    }

    #[getter]
    fn num_trades(&self) -> usize {
        self.log.trades.len()
    }

    /// Records as (time, seq, agent, action, side, price_ticks, volume,
    /// trades, mid_after, cascade_id, cascade_depth) tuples.
    #[allow(clippy::type_complexity)]
    fn records(
        &self,
    ) -> Vec<(
        f64,
        u64,
        u32,
        &'static str,
        Option<&'static str>,
        Option<u64>,
        u64,
        u32,
        Option<f64>,
        Option<u64>,
        Option<u32>,
    )> {
        self.log
            .records
            .iter()
            .map(|r| {
                (
                    r.time,
                    r.seq,
                    r.agent,
                    r.action.label(),
                    r.side.map(|s| s.label()),
                    r.price.map(|p| p.0),
                    r.volume,
                    r.trades_triggered,
                    r.mid_after,
                    r.cascade_id,
                    r.cascade_depth,
                )
            })
            .collect()
    }

    fn trades(&self) -> Vec<TradeTuple> {
        self.log.trades.iter().map(trade_tuple).collect()
    }

    /// Mid-price sampled every `delta` time units by carrying the last
    /// observation forward; bounds default to the run's burn-in/horizon.
    #[pyo3(signature = (delta, burn_in = None, horizon = None, initial_mid = None))]
    fn midprice_series(
        &self,
        delta: f64,
        burn_in: Option<f64>,
        horizon: Option<f64>,
        initial_mid: Option<f64>,
    ) -> PyResult<Vec<f64>> {
        let series = stats::sample_midprice(
            &self.log,
            delta,
            burn_in.unwrap_or(self.config.burn_in),
            horizon.unwrap_or(self.config.horizon),
            initial_mid.unwrap_or(self.config.reference_price),
        )
        .map_err(value_err)?;
        Ok(series.values)
    }

    #[pyo3(signature = (burn_in = None))]
    fn inter_event_times(&self, burn_in: Option<f64>) -> PyResult<Vec<f64>> {
        stats::inter_event_times(&self.log, burn_in.unwrap_or(self.config.burn_in)).map_err(value_err)
    }

    /// Per-trade aggressor signs (+1 buy, -1 sell) in trade order.
    #[pyo3(signature = (burn_in = None))]
    fn trade_signs(&self, burn_in: Option<f64>) -> Vec<f64> {
        stats::trade_signs(&self.log, burn_in.unwrap_or(self.config.burn_in))
    }

    /// Sizes (source plus follow-ups) of cascades sourced after burn-in.
    #[pyo3(signature = (burn_in = None))]
    fn cascade_sizes(&self, burn_in: Option<f64>) -> Vec<u64> {
        harness::cascade_sizes(&self.log, burn_in.unwrap_or(self.config.burn_in))
    }

    fn write_events_csv(&self, path: &str) -> PyResult<()> {
        harness::io::write_events_csv(path.as_ref(), &self.log, self.config.tick_size)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn write_trades_csv(&self, path: &str) -> PyResult<()> {
        harness::io::write_trades_csv(path.as_ref(), &self.log.trades, self.config.tick_size)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

/// Run one realization; pass a Graph to enable spreading.
#[pyfunction]
#[pyo3(signature = (config, graph = None))]
fn run_simulation(config: &SimConfig, graph: Option<&Graph>) -> PyResult<SimResult> {
    let topo = graph.map(|g| &g.inner as &dyn Topology);
    let log = kernel::run(&config.inner, topo).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(SimResult { log, config: config.inner.clone() })
}

/// Run a single cascade from `source`; returns (time, agent, sender,
/// depth) tuples in execution order.
#[pyfunction]
fn run_cascade(
    graph: &Graph,
    source: u32,
    q: f64,
    mean_delay: f64,
    seed: u64,
) -> PyResult<Vec<(f64, u32, Option<u32>, u32)>> {
    graph.check(source)?;
    if !(0.0..=1.0).contains(&q) || !(mean_delay > 0.0) {
        return Err(PyValueError::new_err("need 0 <= q <= 1 and mean_delay > 0"));
    }
    let mut rng = kernel::substream(seed, 0);
    Ok(kernel::run_cascade(&graph.inner, source, q, mean_delay, &mut rng)
        .into_iter()
        .map(|e| (e.time, e.agent, e.sender, e.depth))
        .collect())
}

/// Autocorrelation for lags 0..=max_lag (full-sum denominator, global
/// mean).
#[pyfunction]
fn autocorrelation(values: Vec<f64>, max_lag: usize) -> PyResult<Vec<f64>> {
    Ok(stats::autocorrelation(&values, max_lag).map_err(value_err)?.values)
}

/// Log differences of a positive series.
#[pyfunction]
fn log_returns(values: Vec<f64>) -> PyResult<Vec<f64>> {
    let series = stats::SampledSeries { delta: 1.0, t0: 0.0, values };
    Ok(stats::log_returns(&series).map_err(value_err)?.values)
}

/// Excess kurtosis m4/m2^2 - 3.
#[pyfunction]
fn excess_kurtosis(values: Vec<f64>) -> PyResult<f64> {
    stats::excess_kurtosis(&values).map_err(value_err)
}

#[pymodule]
fn lobnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<OrderBook>()?;
    m.add_class::<Graph>()?;
    m.add_class::<SimConfig>()?;
    m.add_class::<SimResult>()?;
    m.add_function(wrap_pyfunction!(run_simulation, m)?)?;
    m.add_function(wrap_pyfunction!(run_cascade, m)?)?;
    m.add_function(wrap_pyfunction!(autocorrelation, m)?)?;
    m.add_function(wrap_pyfunction!(log_returns, m)?)?;
    m.add_function(wrap_pyfunction!(excess_kurtosis, m)?)?;
    Ok(())
}

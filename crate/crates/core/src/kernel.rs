//! The message-driven event loop. Each agent runs three independent
//! exponential clocks (market, limit, cancel); executing a market or
//! limit source action starts an information cascade that spreads the
//! order's kind and direction over the interaction network with
//! per-neighbor follow probability `q` and exponentially distributed
//! follow-up delays.
//!
//! Randomness discipline: one master seed derives independent ChaCha
//! substreams — one per agent for its source clocks and draws, one for
//! spreading decisions and delays, and one for follow-up order sizing
//! and pricing. Source behavior is therefore untouched by spreading,
//! and a `q = 0` run emits exactly the same source records as a run
//! with no network at all.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agent::{
    sample_direction, sample_limit_price, sample_volume, sample_waiting_time, AgentParams,
    AgentState,
};
use crate::book::{OrderBook, OrderId, Side, TickPrice, Trade};
use crate::network::Graph;

/// Neighbor lookup used by the spreading protocol. Implemented by
/// [`Graph`]; test topologies may compute neighbors on the fly.
pub trait Topology {
    fn node_count(&self) -> u64;
    fn for_each_neighbor(&self, node: u32, visit: &mut dyn FnMut(u32));
}

impl Topology for Graph {
    fn node_count(&self) -> u64 {
        Graph::node_count(self) as u64
    }

    fn for_each_neighbor(&self, node: u32, visit: &mut dyn FnMut(u32)) {
        for &nb in self.neighbors(node) {
            visit(nb);
        }
    }
}

/// Substream indices on top of the master seed. Agents take streams
/// `0..n_agents`; the constants below are offsets past the agent range.
const SPREAD_STREAM: u64 = 0;
const FOLLOW_ORDER_STREAM: u64 = 1;
/// Offset used by the harness when building per-realization networks.
pub const NETWORK_STREAM_OFFSET: u64 = 2;

/// Independent ChaCha substream `index` of a master seed.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Market,
    Limit,
    Cancel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderKind {
    Market,
    Limit,
}

/// What a scheduled event does when it fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventPayload {
    Source {
        agent: u32,
        kind: SourceKind,
    },
    /// A neighbor accepted a spread suggestion: place an order of the
    /// inherited kind and direction, then spread onward excluding
    /// `sender`.
    FollowUp {
        agent: u32,
        kind: OrderKind,
        direction: Side,
        sender: u32,
        cascade: u64,
        depth: u32,
    },
}

/// Queue entry ordered by (time, seq); seq is assigned at scheduling
/// time and never reused, so execution order is total.
struct Scheduled<P> {
    time: f64,
    seq: u64,
    payload: P,
}

impl<P> PartialEq for Scheduled<P> {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq && self.time == other.time
    }
}

impl<P> Eq for Scheduled<P> {}

impl<P> Ord for Scheduled<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for earliest-first.
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
            .reverse()
    }
}

impl<P> PartialOrd for Scheduled<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Run-level configuration of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_agents: u32,
    /// Follow probability per informed neighbor.
    pub q: f64,
    pub agents: AgentParams,
    pub tick_size: f64,
    /// Initial reference price; seeds the mid tracker and fixes the
    /// log-price dispersion.
    pub reference_price: f64,
    pub horizon: f64,
    /// Carried for downstream statistics; the kernel logs everything.
    pub burn_in: f64,
    pub seed: u64,
    /// Optional runaway-cascade guard on the total number of scheduled
    /// events.
    pub max_events: Option<u64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_agents: 1000,
            q: 0.0625,
            agents: AgentParams::default(),
            tick_size: 0.01,
            reference_price: 100.0,
            horizon: 720_000.0,
            burn_in: 72_000.0,
            seed: 0,
            max_events: None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("n_agents must be at least 1")]
    NoAgents,
    #[error("q must lie in [0, 1], got {0}")]
    BadQ(f64),
    #[error("tick_size must be strictly positive, got {0}")]
    BadTick(f64),
    #[error("reference_price must be strictly positive, got {0}")]
    BadReferencePrice(f64),
    #[error("horizon must be non-negative, got {0}")]
    BadHorizon(f64),
    #[error("burn_in must be non-negative and below the horizon, got {burn_in} with horizon {horizon}")]
    BadBurnIn { burn_in: f64, horizon: f64 },
    #[error(transparent)]
    Params(#[from] crate::agent::ParamError),
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_agents < 1 {
            return Err(ConfigError::NoAgents);
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(ConfigError::BadQ(self.q));
        }
        if !(self.tick_size > 0.0) {
            return Err(ConfigError::BadTick(self.tick_size));
        }
        if !(self.reference_price > 0.0) {
            return Err(ConfigError::BadReferencePrice(self.reference_price));
        }
        if !(self.horizon >= 0.0) {
            return Err(ConfigError::BadHorizon(self.horizon));
        }
        if !(self.burn_in >= 0.0) || (self.horizon > 0.0 && self.burn_in >= self.horizon) {
            return Err(ConfigError::BadBurnIn {
                burn_in: self.burn_in,
                horizon: self.horizon,
            });
        }
        self.agents.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("event cap exceeded: more than {cap} events scheduled (runaway cascade?)")]
    EventCapExceeded { cap: u64 },
}

/// The kind of action a log record describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    LimitPlaced,
    MarketPlaced,
    Cancelled,
    FollowUpLimit,
    FollowUpMarket,
}

impl Action {
    pub fn label(self) -> &'static str {
        match self {
            Action::LimitPlaced => "limit",
            Action::MarketPlaced => "market",
            Action::Cancelled => "cancel",
            Action::FollowUpLimit => "followup_limit",
            Action::FollowUpMarket => "followup_market",
        }
    }

    pub fn parse(s: &str) -> Option<Action> {
        match s {
            "limit" => Some(Action::LimitPlaced),
            "market" => Some(Action::MarketPlaced),
            "cancel" => Some(Action::Cancelled),
            "followup_limit" => Some(Action::FollowUpLimit),
            "followup_market" => Some(Action::FollowUpMarket),
            _ => None,
        }
    }

    pub fn is_follow_up(self) -> bool {
        matches!(self, Action::FollowUpLimit | Action::FollowUpMarket)
    }
}

/// One executed action. `cascade_id`/`cascade_depth` are present on
/// market/limit placements (depth 0 for source actions) and absent on
/// cancellations, which never spread. A cancellation that found nothing
/// to cancel still counts as an event (the agent acted) and is recorded
/// with no side, no price and zero volume.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLogRecord {
    pub time: f64,
    pub seq: u64,
    pub agent: u32,
    pub action: Action,
    /// Order direction; the cancelled order's side for cancellations;
    /// absent for empty-handed cancellations.
    pub side: Option<Side>,
    /// Limit price for (follow-up) limit orders; the cancelled order's
    /// price for cancellations; absent for market orders.
    pub price: Option<TickPrice>,
    /// Submitted volume, or the cancelled remainder for cancellations.
    pub volume: u64,
    pub trades_triggered: u32,
    /// Book mid after the action, if both sides are quoted.
    pub mid_after: Option<f64>,
    pub cascade_id: Option<u64>,
    pub cascade_depth: Option<u32>,
}

/// Everything a realization emits: per-action records in execution
/// order and the trade tape.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub records: Vec<EventLogRecord>,
    pub trades: Vec<Trade>,
}

/// One event of a stand-alone cascade run.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeEvent {
    pub time: f64,
    pub agent: u32,
    pub sender: Option<u32>,
    pub depth: u32,
}

/// Per-neighbor spreading step shared by the full simulation and
/// [`run_cascade`]: for every neighbor of `origin` except `excluded`,
/// draw the follow decision and, on success, a follow-up delay.
/// Exactly one uniform draw per neighbor plus one per accepted
/// follow-up, in neighbor order.
fn spread_step(
    topo: &dyn Topology,
    origin: u32,
    excluded: Option<u32>,
    q: f64,
    mean_delay: f64,
    rng: &mut dyn RngCore,
    schedule: &mut dyn FnMut(u32, f64),
) -> u32 {
    let mut count = 0;
    topo.for_each_neighbor(origin, &mut |neighbor| {
        if Some(neighbor) == excluded {
            return;
        }
        if crate::agent::standard_uniform(rng) < q {
            let delay = sample_waiting_time(mean_delay, rng);
            schedule(neighbor, delay);
            count += 1;
        }
    });
    count
}

/// Run a single information cascade on a topology, without a market:
/// the source fires at time 0 and every accepted suggestion spreads
/// onward under sender exclusion. Returns all placements (source
/// included) in execution order. Useful for protocol-level diagnostics.
pub fn run_cascade(
    topo: &dyn Topology,
    source: u32,
    q: f64,
    mean_delay: f64,
    rng: &mut dyn RngCore,
) -> Vec<CascadeEvent> {
    struct Node {
        agent: u32,
        sender: Option<u32>,
        depth: u32,
    }
    let mut queue: BinaryHeap<Scheduled<Node>> = BinaryHeap::new();
    let mut next_seq = 0u64;
    queue.push(Scheduled {
        time: 0.0,
        seq: 0,
        payload: Node { agent: source, sender: None, depth: 0 },
    });
    next_seq += 1;
    let mut events = Vec::new();
    while let Some(ev) = queue.pop() {
        let Node { agent, sender, depth } = ev.payload;
        events.push(CascadeEvent { time: ev.time, agent, sender, depth });
        spread_step(topo, agent, sender, q, mean_delay, rng, &mut |neighbor, delay| {
            queue.push(Scheduled {
                time: ev.time + delay,
                seq: next_seq,
                payload: Node { agent: neighbor, sender: Some(agent), depth: depth + 1 },
            });
            next_seq += 1;
        });
    }
    events
}

/// One realization's full world state.
pub struct Simulation<'t> {
    config: SimConfig,
    topo: Option<&'t dyn Topology>,
    book: OrderBook,
    agents: Vec<AgentState>,
    agent_rngs: Vec<ChaCha8Rng>,
    spread_rng: Box<dyn RngCore + Send>,
    follow_order_rng: ChaCha8Rng,
    queue: BinaryHeap<Scheduled<EventPayload>>,
    next_seq: u64,
    next_cascade: u64,
    /// Last valid mid in price units; starts at the reference price and
    /// only updates while both sides are quoted.
    last_mid: f64,
    sigma_log: f64,
    owners: HashMap<OrderId, u32>,
    scheduled: u64,
    processed: u64,
    log: EventLog,
}

impl<'t> Simulation<'t> {
    /// Build a simulation and schedule each agent's first market, limit
    /// and cancellation actions at independent exponential waiting
    /// times from t = 0.
    pub fn new(config: SimConfig, topo: Option<&'t dyn Topology>) -> Result<Self, ConfigError> {
        let spread_rng = Box::new(substream(
            config.seed,
            config.n_agents as u64 + SPREAD_STREAM,
        ));
        Self::with_spread_rng(config, topo, spread_rng)
    }

    /// Like [`Simulation::new`] but with caller-supplied spreading
    /// randomness. The spreading stream consumes exactly one `next_u64`
    /// per considered neighbor plus one per accepted follow-up, which
    /// makes the protocol scriptable for conformance checks.
    pub fn with_spread_rng(
        config: SimConfig,
        topo: Option<&'t dyn Topology>,
        spread_rng: Box<dyn RngCore + Send>,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        let n = config.n_agents;
        let agent_rngs: Vec<ChaCha8Rng> =
            (0..n).map(|i| substream(config.seed, i as u64)).collect();
        let follow_order_rng = substream(config.seed, n as u64 + FOLLOW_ORDER_STREAM);
        let sigma_log = config.agents.sigma_log(config.reference_price);
        let mut sim = Simulation {
            book: OrderBook::new(config.tick_size),
            agents: (0..n).map(AgentState::new).collect(),
            agent_rngs,
            spread_rng,
            follow_order_rng,
            queue: BinaryHeap::new(),
            next_seq: 0,
            next_cascade: 0,
            last_mid: config.reference_price,
            sigma_log,
            owners: HashMap::new(),
            scheduled: 0,
            processed: 0,
            log: EventLog::default(),
            topo,
            config,
        };
        sim.init_schedule()?;
        Ok(sim)
    }

    fn init_schedule(&mut self) -> Result<(), ConfigError> {
        for agent in 0..self.config.n_agents {
            for kind in [SourceKind::Market, SourceKind::Limit, SourceKind::Cancel] {
                let mean = self.mean_waiting(kind);
                let dt = sample_waiting_time(mean, &mut self.agent_rngs[agent as usize]);
                self.schedule(dt, EventPayload::Source { agent, kind })
                    .expect("initial schedule cannot exceed the cap");
            }
        }
        Ok(())
    }

    fn mean_waiting(&self, kind: SourceKind) -> f64 {
        match kind {
            SourceKind::Market => self.config.agents.lambda_market,
            SourceKind::Limit => self.config.agents.lambda_limit,
            SourceKind::Cancel => self.config.agents.lambda_cancel,
        }
    }

    fn schedule(&mut self, time: f64, payload: EventPayload) -> Result<(), RunError> {
        self.scheduled += 1;
        if let Some(cap) = self.config.max_events {
            if self.scheduled > cap {
                return Err(RunError::EventCapExceeded { cap });
            }
        }
        self.queue.push(Scheduled { time, seq: self.next_seq, payload });
        self.next_seq += 1;
        Ok(())
    }

    /// Number of events waiting in the queue.
    pub fn queued_events(&self) -> usize {
        self.queue.len()
    }

    /// Time of the next scheduled event.
    pub fn next_event_time(&self) -> Option<f64> {
        self.queue.peek().map(|e| e.time)
    }

    /// Events executed so far.
    pub fn processed_events(&self) -> u64 {
        self.processed
    }

    /// Process events in (time, seq) order until the next event's time
    /// exceeds the horizon.
    pub fn run_to_horizon(&mut self) -> Result<(), RunError> {
        while let Some(ev) = self.queue.peek() {
            if ev.time > self.config.horizon {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            self.processed += 1;
            match ev.payload {
                EventPayload::Source { agent, kind } => {
                    self.handle_source(ev.time, ev.seq, agent, kind)?
                }
                EventPayload::FollowUp { agent, kind, direction, sender, cascade, depth } => {
                    self.handle_followup(ev.time, ev.seq, agent, kind, direction, sender, cascade, depth)?
                }
            }
        }
        Ok(())
    }

    pub fn into_log(self) -> EventLog {
        self.log
    }

    fn handle_source(&mut self, time: f64, seq: u64, agent: u32, kind: SourceKind) -> Result<(), RunError> {
        match kind {
            SourceKind::Market => {
                let side = sample_direction(&mut self.agent_rngs[agent as usize]);
                let volume = sample_volume(&self.config.agents, &mut self.agent_rngs[agent as usize]);
                let report = self
                    .book
                    .submit_market(agent, side, volume, time)
                    .expect("sampled volume is positive");
                self.absorb_report(agent, &report);
                self.push_record(EventLogRecord {
                    time,
                    seq,
                    agent,
                    action: Action::MarketPlaced,
                    side: Some(side),
                    price: None,
                    volume,
                    trades_triggered: report.trades.len() as u32,
                    mid_after: self.book.quotes().mid,
                    cascade_id: Some(self.next_cascade),
                    cascade_depth: Some(0),
                });
                self.log.trades.extend(report.trades);
                self.reschedule(time, agent, kind)?;
                self.start_cascade(time, agent, OrderKind::Market, side)?;
            }
            SourceKind::Limit => {
                let rng = &mut self.agent_rngs[agent as usize];
                let side = sample_direction(rng);
                let volume = sample_volume(&self.config.agents, rng);
                let price = sample_limit_price(self.last_mid, self.sigma_log, self.config.tick_size, rng);
                let report = self
                    .book
                    .submit_limit(agent, side, price, volume, time)
                    .expect("sampled price and volume are positive");
                self.absorb_report(agent, &report);
                self.push_record(EventLogRecord {
                    time,
                    seq,
                    agent,
                    action: Action::LimitPlaced,
                    side: Some(side),
                    price: Some(price),
                    volume,
                    trades_triggered: report.trades.len() as u32,
                    mid_after: self.book.quotes().mid,
                    cascade_id: Some(self.next_cascade),
                    cascade_depth: Some(0),
                });
                self.log.trades.extend(report.trades);
                self.reschedule(time, agent, kind)?;
                self.start_cascade(time, agent, OrderKind::Limit, side)?;
            }
            SourceKind::Cancel => {
                let target = self.agents[agent as usize]
                    .pick_cancellation_target(&mut self.agent_rngs[agent as usize]);
                // The agent acts at this instant either way; an
                // empty-handed cancellation is still an event.
                let (side, price, cancelled) = match target {
                    Some(id) => {
                        let order = self.book.order(id).expect("agent state mirrors the book");
                        let (side, price) = (order.side, order.price);
                        match self.book.cancel(id) {
                            Ok(cancelled) => {
                                self.owners.remove(&id);
                                self.agents[agent as usize].remove(id);
                                self.track_mid();
                                (Some(side), Some(price), cancelled)
                            }
                            // A fill/cancel race is benign; nothing happened.
                            Err(_) => (None, None, 0),
                        }
                    }
                    None => (None, None, 0),
                };
                self.push_record(EventLogRecord {
                    time,
                    seq,
                    agent,
                    action: Action::Cancelled,
                    side,
                    price,
                    volume: cancelled,
                    trades_triggered: 0,
                    mid_after: self.book.quotes().mid,
                    cascade_id: None,
                    cascade_depth: None,
                });
                self.reschedule(time, agent, kind)?;
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn handle_followup(
        &mut self,
        time: f64,
        seq: u64,
        agent: u32,
        kind: OrderKind,
        direction: Side,
        sender: u32,
        cascade: u64,
        depth: u32,
    ) -> Result<(), RunError> {
        let volume = sample_volume(&self.config.agents, &mut self.follow_order_rng);
        let (action, price, report) = match kind {
            OrderKind::Market => {
                let report = self
                    .book
                    .submit_market(agent, direction, volume, time)
                    .expect("sampled volume is positive");
                (Action::FollowUpMarket, None, report)
            }
            OrderKind::Limit => {
                let price = sample_limit_price(
                    self.last_mid,
                    self.sigma_log,
                    self.config.tick_size,
                    &mut self.follow_order_rng,
                );
                let report = self
                    .book
                    .submit_limit(agent, direction, price, volume, time)
                    .expect("sampled price and volume are positive");
                (Action::FollowUpLimit, Some(price), report)
            }
        };
        self.absorb_report(agent, &report);
        self.push_record(EventLogRecord {
            time,
            seq,
            agent,
            action,
            side: Some(direction),
            price,
            volume,
            trades_triggered: report.trades.len() as u32,
            mid_after: self.book.quotes().mid,
            cascade_id: Some(cascade),
            cascade_depth: Some(depth),
        });
        self.log.trades.extend(report.trades);
        self.propagate(time, agent, kind, direction, Some(sender), cascade, depth)?;
        Ok(())
    }

    /// Open a fresh cascade for a market/limit source action and spread
    /// from its agent with no sender exclusion.
    fn start_cascade(&mut self, time: f64, agent: u32, kind: OrderKind, direction: Side) -> Result<(), RunError> {
        let cascade = self.next_cascade;
        self.next_cascade += 1;
        self.propagate(time, agent, kind, direction, None, cascade, 0)
    }

    /// Spread one step outward from `origin`; accepted neighbors are
    /// scheduled at exponential follow-up delays with `origin` recorded
    /// as sender (never spread straight back), at depth + 1.
    fn propagate(
        &mut self,
        time: f64,
        origin: u32,
        kind: OrderKind,
        direction: Side,
        excluded: Option<u32>,
        cascade: u64,
        depth: u32,
    ) -> Result<(), RunError> {
        let Some(topo) = self.topo else { return Ok(()) };
        let q = self.config.q;
        let mean_delay = self.config.agents.lambda_follow;
        let mut pending: Vec<(u32, f64)> = Vec::new();
        spread_step(
            topo,
            origin,
            excluded,
            q,
            mean_delay,
            self.spread_rng.as_mut(),
            &mut |neighbor, delay| pending.push((neighbor, delay)),
        );
        for (neighbor, delay) in pending {
            self.schedule(
                time + delay,
                EventPayload::FollowUp {
                    agent: neighbor,
                    kind,
                    direction,
                    sender: origin,
                    cascade,
                    depth: depth + 1,
                },
            )?;
        }
        Ok(())
    }

    fn reschedule(&mut self, time: f64, agent: u32, kind: SourceKind) -> Result<(), RunError> {
        let mean = self.mean_waiting(kind);
        let dt = sample_waiting_time(mean, &mut self.agent_rngs[agent as usize]);
        self.schedule(time + dt, EventPayload::Source { agent, kind })
    }

    /// Register a resting remainder and drop fully filled makers from
    /// their owners' active sets.
    fn absorb_report(&mut self, taker: u32, report: &crate::book::ExecutionReport) {
        for &id in &report.filled_makers {
            if let Some(owner) = self.owners.remove(&id) {
                self.agents[owner as usize].remove(id);
            }
        }
        if let Some(id) = report.resting_order {
            self.owners.insert(id, taker);
            self.agents[taker as usize].insert(id);
        }
        self.track_mid();
    }

    fn track_mid(&mut self) {
        if let Some(mid) = self.book.quotes().mid {
            self.last_mid = mid;
        }
    }

    fn push_record(&mut self, record: EventLogRecord) {
        self.log.records.push(record);
    }
}

/// Run one realization to its horizon and return the event log.
pub fn run(config: &SimConfig, topo: Option<&dyn Topology>) -> Result<EventLog, RunError> {
    let mut sim = Simulation::new(config.clone(), topo)?;
    sim.run_to_horizon()?;
    Ok(sim.into_log())
}

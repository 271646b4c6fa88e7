//! Continuous double-auction order book with price-time priority.
//!
//! Prices are integer tick counts; real-valued prices only appear in
//! derived quantities (mid, spread). Matching consumes resting orders
//! in price-then-FIFO order, and every trade executes at the resting
//! (maker) order's limit price.

use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

/// Price expressed in integer ticks (1 tick = `tick_size` price units).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TickPrice(pub u64);

impl TickPrice {
    /// Real price in price units for a given tick size.
    pub fn to_price(self, tick_size: f64) -> f64 {
        self.0 as f64 * tick_size
    }
}

/// Order direction. `Bid` buys, `Ask` sells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Bid => "bid",
            Side::Ask => "ask",
        }
    }

    /// Trade-sign convention: +1 for buyer-initiated, -1 for seller-initiated.
    pub fn sign(self) -> f64 {
        match self {
            Side::Bid => 1.0,
            Side::Ask => -1.0,
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s {
            "bid" => Some(Side::Bid),
            "ask" => Some(Side::Ask),
            _ => None,
        }
    }
}

/// Identifier handed out by [`OrderBook::submit_limit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderId(pub u64);

/// A resting limit order.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitOrder {
    pub id: OrderId,
    pub agent: u32,
    pub side: Side,
    pub price: TickPrice,
    pub remaining_volume: u64,
    pub entry_time: f64,
    pub entry_seq: u64,
}

/// One execution. `price` is always the maker's limit price.
#[derive(Debug, Clone, PartialEq)]
pub struct Trade {
    pub time: f64,
    pub price: TickPrice,
    pub volume: u64,
    pub aggressor_side: Side,
    pub maker_order: OrderId,
    pub taker_agent: u32,
}

/// Best quotes and derived mid/spread (present iff both sides are quoted).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BookQuotes {
    pub best_bid: Option<TickPrice>,
    pub best_ask: Option<TickPrice>,
    pub mid: Option<f64>,
    pub spread: Option<f64>,
}

/// Aggregated per-price view of one side of the book.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthLevel {
    pub side: Side,
    pub price: TickPrice,
    pub volume: u64,
    pub orders: u32,
}

/// Outcome of a submission: trades in execution order, the id of a
/// resting remainder (limit orders only), any discarded remainder
/// (market orders only), and the resting orders fully consumed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecutionReport {
    pub trades: Vec<Trade>,
    pub resting_order: Option<OrderId>,
    pub discarded_volume: u64,
    pub filled_makers: Vec<OrderId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BookError {
    #[error("order volume must be at least one share")]
    InvalidVolume,
    #[error("limit price must be at least one tick")]
    InvalidPrice,
    #[error("order no longer rests (already filled or cancelled)")]
    OrderGone,
}

/// Price-time-priority order book. One level per tick price, FIFO within
/// a level. Best-price access is O(log levels) through the `BTreeMap`s.
#[derive(Debug, Clone)]
pub struct OrderBook {
    tick_size: f64,
    bids: BTreeMap<u64, VecDeque<LimitOrder>>,
    asks: BTreeMap<u64, VecDeque<LimitOrder>>,
    // id -> (side, price ticks) of the level the order rests in
    index: HashMap<OrderId, (Side, u64)>,
    next_order_id: u64,
    next_entry_seq: u64,
}

impl OrderBook {
    pub fn new(tick_size: f64) -> Self {
        assert!(tick_size > 0.0, "tick size must be positive");
        OrderBook {
            tick_size,
            bids: BTreeMap::new(),
            asks: BTreeMap::new(),
            index: HashMap::new(),
            next_order_id: 0,
            next_entry_seq: 0,
        }
    }

    pub fn tick_size(&self) -> f64 {
        self.tick_size
    }

    /// Number of resting orders.
    pub fn order_count(&self) -> usize {
        self.index.len()
    }

    pub fn contains(&self, id: OrderId) -> bool {
        self.index.contains_key(&id)
    }

    /// Look up a resting order by id.
    pub fn order(&self, id: OrderId) -> Option<&LimitOrder> {
        let (side, price) = *self.index.get(&id)?;
        let level = match side {
            Side::Bid => self.bids.get(&price)?,
            Side::Ask => self.asks.get(&price)?,
        };
        level.iter().find(|o| o.id == id)
    }

    /// Submit a limit order. Executes against the opposite side while the
    /// opposite best price satisfies the limit, then rests any remainder.
    pub fn submit_limit(
        &mut self,
        agent: u32,
        side: Side,
        price: TickPrice,
        volume: u64,
        time: f64,
    ) -> Result<ExecutionReport, BookError> {
        if volume < 1 {
            return Err(BookError::InvalidVolume);
        }
        if price.0 < 1 {
            return Err(BookError::InvalidPrice);
        }
        let id = OrderId(self.next_order_id);
        self.next_order_id += 1;
        let mut report = ExecutionReport::default();
        let remaining = self.match_against(side, Some(price.0), volume, agent, time, &mut report);
        if remaining > 0 {
            let entry_seq = self.next_entry_seq;
            self.next_entry_seq += 1;
            let order = LimitOrder {
                id,
                agent,
                side,
                price,
                remaining_volume: remaining,
                entry_time: time,
                entry_seq,
            };
            self.index.insert(id, (side, price.0));
            self.level_mut(side, price.0).push_back(order);
            report.resting_order = Some(id);
        }
        debug_assert!(self.not_crossed());
        Ok(report)
    }

    /// Submit a market order. Consumes the opposite side until the volume
    /// is exhausted or the side empties; an unfilled remainder is discarded.
    pub fn submit_market(
        &mut self,
        agent: u32,
        side: Side,
        volume: u64,
        time: f64,
    ) -> Result<ExecutionReport, BookError> {
        if volume < 1 {
            return Err(BookError::InvalidVolume);
        }
        let mut report = ExecutionReport::default();
        let remaining = self.match_against(side, None, volume, agent, time, &mut report);
        report.discarded_volume = remaining;
        debug_assert!(self.not_crossed());
        Ok(report)
    }

    /// Remove a resting order, returning its remaining volume.
    pub fn cancel(&mut self, id: OrderId) -> Result<u64, BookError> {
        let (side, price) = self.index.remove(&id).ok_or(BookError::OrderGone)?;
        let book_side = match side {
            Side::Bid => &mut self.bids,
            Side::Ask => &mut self.asks,
        };
        let level = book_side.get_mut(&price).expect("indexed level exists");
        let pos = level
            .iter()
            .position(|o| o.id == id)
            .expect("indexed order exists in level");
        let cancelled = level.remove(pos).expect("position valid").remaining_volume;
        if level.is_empty() {
            book_side.remove(&price);
        }
        Ok(cancelled)
    }

    pub fn quotes(&self) -> BookQuotes {
        let best_bid = self.bids.keys().next_back().copied();
        let best_ask = self.asks.keys().next().copied();
        // Sum in f64: extreme cascades can push tick prices far beyond
        // half the u64 range.
        let (mid, spread) = match (best_bid, best_ask) {
            (Some(b), Some(a)) => (
                Some((a as f64 + b as f64) / 2.0 * self.tick_size),
                Some((a - b) as f64 * self.tick_size),
            ),
            _ => (None, None),
        };
        BookQuotes {
            best_bid: best_bid.map(TickPrice),
            best_ask: best_ask.map(TickPrice),
            mid,
            spread,
        }
    }

    /// Per-level aggregation: bids from best (highest) down, then asks
    /// from best (lowest) up.
    pub fn depth_snapshot(&self) -> Vec<DepthLevel> {
        let mut out = Vec::with_capacity(self.bids.len() + self.asks.len());
        for (&price, level) in self.bids.iter().rev() {
            out.push(Self::aggregate(Side::Bid, price, level));
        }
        for (&price, level) in self.asks.iter() {
            out.push(Self::aggregate(Side::Ask, price, level));
        }
        out
    }

    fn aggregate(side: Side, price: u64, level: &VecDeque<LimitOrder>) -> DepthLevel {
        DepthLevel {
            side,
            price: TickPrice(price),
            volume: level.iter().map(|o| o.remaining_volume).sum(),
            orders: level.len() as u32,
        }
    }

    fn level_mut(&mut self, side: Side, price: u64) -> &mut VecDeque<LimitOrder> {
        let book_side = match side {
            Side::Bid => &mut self.bids,
            Side::Ask => &mut self.asks,
        };
        book_side.entry(price).or_default()
    }

    /// Core matching loop shared by limit and market submissions.
    /// `limit` of `None` means no price constraint. Returns the unmatched
    /// remainder.
    fn match_against(
        &mut self,
        aggressor_side: Side,
        limit: Option<u64>,
        mut volume: u64,
        taker_agent: u32,
        time: f64,
        report: &mut ExecutionReport,
    ) -> u64 {
        while volume > 0 {
            let opposite = match aggressor_side {
                Side::Bid => &mut self.asks,
                Side::Ask => &mut self.bids,
            };
            // Best opposite level: lowest ask for a buyer, highest bid for a seller.
            let best_price = match aggressor_side {
                Side::Bid => opposite.keys().next().copied(),
                Side::Ask => opposite.keys().next_back().copied(),
            };
            let Some(best_price) = best_price else { break };
            let satisfies = match (aggressor_side, limit) {
                (_, None) => true,
                (Side::Bid, Some(l)) => best_price <= l,
                (Side::Ask, Some(l)) => best_price >= l,
            };
            if !satisfies {
                break;
            }
            let level = opposite.get_mut(&best_price).expect("level exists");
            let maker = level.front_mut().expect("levels are never empty");
            let traded = volume.min(maker.remaining_volume);
            maker.remaining_volume -= traded;
            volume -= traded;
            report.trades.push(Trade {
                time,
                price: TickPrice(best_price),
                volume: traded,
                aggressor_side,
                maker_order: maker.id,
                taker_agent,
            });
            if maker.remaining_volume == 0 {
                let id = maker.id;
                level.pop_front();
                if level.is_empty() {
                    opposite.remove(&best_price);
                }
                self.index.remove(&id);
                report.filled_makers.push(id);
            }
        }
        volume
    }

    fn not_crossed(&self) -> bool {
        match (self.bids.keys().next_back(), self.asks.keys().next()) {
            (Some(b), Some(a)) => b < a,
            _ => true,
        }
    }
}

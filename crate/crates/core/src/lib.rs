//! Event-driven simulation of a continuous double-auction market whose
//! zero-intelligence agents share order decisions over an interaction
//! network, plus the statistics pipeline that turns the resulting event
//! logs into stylized-fact diagnostics.
//!
//! The crate is organized along the moving parts of the model:
//!
//! - [`book`]: the limit order book and price-time-priority matching.
//! - [`network`]: static interaction topologies (diagonal-extended
//!   lattice, Erdős–Rényi, Barabási–Albert) with average degree 8.
//! - [`agent`]: the random draws behind every agent decision (waiting
//!   times, direction, volume, limit price, cancellation target).
//! - [`kernel`]: the message-driven event loop and the cascade
//!   spreading protocol.
//! - [`stats`]: return/sign/waiting-time estimators and histograms.
//! - [`harness`]: configuration, scenario orchestration, CSV
//!   persistence and the `lobnet` command-line tool.

pub mod agent;
pub mod book;
pub mod harness;
pub mod kernel;
pub mod network;
pub mod stats;

pub use book::{BookError, BookQuotes, ExecutionReport, LimitOrder, OrderBook, OrderId, Side, TickPrice, Trade};
pub use kernel::{run, EventLog, EventLogRecord, SimConfig};
pub use network::Graph;

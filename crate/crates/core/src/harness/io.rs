//! CSV persistence. All files carry a one-line header, UTF-8, comma
//! separator, `.` decimal point. Prices serialize as decimal strings at
//! exactly the tick's precision; times and derived quantities use
//! Rust's shortest round-trip float formatting, so reading a file back
//! reproduces the in-memory values bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::book::{OrderId, Side, TickPrice, Trade};
use crate::kernel::{Action, EventLog, EventLogRecord};
use crate::stats::{AcfResult, Histogram};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Malformed { path: PathBuf, line: usize, msg: String },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.to_path_buf(), source }
}

fn malformed(path: &Path, line: usize, msg: impl Into<String>) -> DataError {
    DataError::Malformed { path: path.to_path_buf(), line, msg: msg.into() }
}

/// Decimal places needed to print a tick-aligned price exactly.
pub fn price_decimals(tick_size: f64) -> usize {
    for d in 0..=9usize {
        let scaled = tick_size * 10f64.powi(d as i32);
        if (scaled - scaled.round()).abs() < 1e-9 * scaled.max(1.0) {
            return d;
        }
    }
    9
}

pub fn format_price(price: TickPrice, tick_size: f64, decimals: usize) -> String {
    format!("{:.*}", decimals, price.0 as f64 * tick_size)
}

pub fn parse_price(s: &str, tick_size: f64) -> Option<TickPrice> {
    let value: f64 = s.parse().ok()?;
    let ticks = (value / tick_size).round();
    if ticks < 1.0 {
        return None;
    }
    Some(TickPrice(ticks as u64))
}

fn create(path: &Path) -> Result<BufWriter<File>, DataError> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn open(path: &Path) -> Result<BufReader<File>, DataError> {
    Ok(BufReader::new(File::open(path).map_err(io_err(path))?))
}

pub const EVENTS_HEADER: &str =
    "time,seq,agent,action,side,price,volume,trades,mid_after,cascade_id,cascade_depth";

pub fn write_events_csv(path: &Path, log: &EventLog, tick_size: f64) -> Result<(), DataError> {
    let decimals = price_decimals(tick_size);
    let mut w = create(path)?;
    let err = io_err(path);
    (|| -> std::io::Result<()> {
        writeln!(w, "{EVENTS_HEADER}")?;
        for r in &log.records {
            write!(w, "{},{},{},{},", r.time, r.seq, r.agent, r.action.label())?;
            if let Some(side) = r.side {
                write!(w, "{}", side.label())?;
            }
            write!(w, ",")?;
            match r.price {
                Some(p) => write!(w, "{}", format_price(p, tick_size, decimals))?,
                None => {}
            }
            write!(w, ",{},{},", r.volume, r.trades_triggered)?;
            if let Some(mid) = r.mid_after {
                write!(w, "{mid}")?;
            }
            write!(w, ",")?;
            if let Some(c) = r.cascade_id {
                write!(w, "{c}")?;
            }
            write!(w, ",")?;
            if let Some(d) = r.cascade_depth {
                write!(w, "{d}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    })()
    .map_err(err)
}

pub fn read_events_csv(path: &Path, tick_size: f64) -> Result<Vec<EventLogRecord>, DataError> {
    let reader = open(path)?;
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if idx == 0 {
            if line != EVENTS_HEADER {
                return Err(malformed(path, 1, "unexpected events header"));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(malformed(path, idx + 1, format!("expected 11 fields, got {}", fields.len())));
        }
        let bad = |msg: &str| malformed(path, idx + 1, msg.to_string());
        let record = EventLogRecord {
            time: fields[0].parse().map_err(|_| bad("bad time"))?,
            seq: fields[1].parse().map_err(|_| bad("bad seq"))?,
            agent: fields[2].parse().map_err(|_| bad("bad agent"))?,
            action: Action::parse(fields[3]).ok_or_else(|| bad("bad action"))?,
            side: if fields[4].is_empty() {
                None
            } else {
                Some(Side::parse(fields[4]).ok_or_else(|| bad("bad side"))?)
            },
            price: if fields[5].is_empty() {
                None
            } else {
                Some(parse_price(fields[5], tick_size).ok_or_else(|| bad("bad price"))?)
            },
            volume: fields[6].parse().map_err(|_| bad("bad volume"))?,
            trades_triggered: fields[7].parse().map_err(|_| bad("bad trade count"))?,
            mid_after: if fields[8].is_empty() {
                None
            } else {
                Some(fields[8].parse().map_err(|_| bad("bad mid"))?)
            },
            cascade_id: if fields[9].is_empty() {
                None
            } else {
                Some(fields[9].parse().map_err(|_| bad("bad cascade id"))?)
            },
            cascade_depth: if fields[10].is_empty() {
                None
            } else {
                Some(fields[10].parse().map_err(|_| bad("bad cascade depth"))?)
            },
        };
        records.push(record);
    }
    Ok(records)
}

pub const TRADES_HEADER: &str = "time,price,volume,aggressor,maker_order,taker_agent";

pub fn write_trades_csv(path: &Path, trades: &[Trade], tick_size: f64) -> Result<(), DataError> {
    let decimals = price_decimals(tick_size);
    let mut w = create(path)?;
    let err = io_err(path);
    (|| -> std::io::Result<()> {
        writeln!(w, "{TRADES_HEADER}")?;
        for t in trades {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                t.time,
                format_price(t.price, tick_size, decimals),
                t.volume,
                t.aggressor_side.label(),
                t.maker_order.0,
                t.taker_agent
            )?;
        }
        w.flush()
    })()
    .map_err(err)
}

pub fn read_trades_csv(path: &Path, tick_size: f64) -> Result<Vec<Trade>, DataError> {
    let reader = open(path)?;
    let mut trades = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if idx == 0 {
            if line != TRADES_HEADER {
                return Err(malformed(path, 1, "unexpected trades header"));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(malformed(path, idx + 1, format!("expected 6 fields, got {}", fields.len())));
        }
        let bad = |msg: &str| malformed(path, idx + 1, msg.to_string());
        trades.push(Trade {
            time: fields[0].parse().map_err(|_| bad("bad time"))?,
            price: parse_price(fields[1], tick_size).ok_or_else(|| bad("bad price"))?,
            volume: fields[2].parse().map_err(|_| bad("bad volume"))?,
            aggressor_side: Side::parse(fields[3]).ok_or_else(|| bad("bad side"))?,
            maker_order: OrderId(fields[4].parse().map_err(|_| bad("bad maker id"))?),
            taker_agent: fields[5].parse().map_err(|_| bad("bad taker"))?,
        });
    }
    Ok(trades)
}

pub const ACF_HEADER: &str = "lag,value,realization";

/// One file holds every realization's curve, keyed by the last column.
pub fn write_acf_csv(path: &Path, curves: &[(u32, &AcfResult)]) -> Result<(), DataError> {
    let mut w = create(path)?;
    let err = io_err(path);
    (|| -> std::io::Result<()> {
        writeln!(w, "{ACF_HEADER}")?;
        for (realization, acf) in curves {
            for (lag, value) in acf.values.iter().enumerate() {
                writeln!(w, "{lag},{value},{realization}")?;
            }
        }
        w.flush()
    })()
    .map_err(err)
}

pub const ACF_MEAN_HEADER: &str = "lag,value";

pub fn write_acf_mean_csv(path: &Path, acf: &AcfResult) -> Result<(), DataError> {
    let mut w = create(path)?;
    let err = io_err(path);
    (|| -> std::io::Result<()> {
        writeln!(w, "{ACF_MEAN_HEADER}")?;
        for (lag, value) in acf.values.iter().enumerate() {
            writeln!(w, "{lag},{value}")?;
        }
        w.flush()
    })()
    .map_err(err)
}

pub fn read_acf_mean_csv(path: &Path) -> Result<AcfResult, DataError> {
    let reader = open(path)?;
    let mut values = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if idx == 0 {
            if line != ACF_MEAN_HEADER {
                return Err(malformed(path, 1, "unexpected acf header"));
            }
            continue;
        }
        let (lag, value) = line
            .split_once(',')
            .ok_or_else(|| malformed(path, idx + 1, "expected 2 fields"))?;
        let lag: usize = lag.parse().map_err(|_| malformed(path, idx + 1, "bad lag"))?;
        if lag != values.len() {
            return Err(malformed(path, idx + 1, "lags out of order"));
        }
        values.push(value.parse().map_err(|_| malformed(path, idx + 1, "bad value"))?);
    }
    if values.is_empty() {
        return Err(malformed(path, 1, "empty acf file"));
    }
    Ok(AcfResult { values })
}

pub const HIST_HEADER: &str = "bin_left,bin_right,count";

/// Histogram rows plus the out-of-range tallies: the underflow row has
/// an empty `bin_left`, the overflow row an empty `bin_right`.
pub fn write_hist_csv(path: &Path, hist: &Histogram) -> Result<(), DataError> {
    let mut w = create(path)?;
    let err = io_err(path);
    (|| -> std::io::Result<()> {
        writeln!(w, "{HIST_HEADER}")?;
        writeln!(w, ",{},{}", hist.edges[0], hist.underflow)?;
        for (i, count) in hist.counts.iter().enumerate() {
            writeln!(w, "{},{},{}", hist.edges[i], hist.edges[i + 1], count)?;
        }
        writeln!(w, "{},,{}", hist.edges[hist.edges.len() - 1], hist.overflow)?;
        w.flush()
    })()
    .map_err(err)
}

pub fn read_hist_csv(path: &Path) -> Result<Histogram, DataError> {
    let reader = open(path)?;
    let mut edges: Vec<f64> = Vec::new();
    let mut counts = Vec::new();
    let mut underflow = 0;
    let mut overflow = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if idx == 0 {
            if line != HIST_HEADER {
                return Err(malformed(path, 1, "unexpected histogram header"));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(malformed(path, idx + 1, "expected 3 fields"));
        }
        let bad = |msg: &str| malformed(path, idx + 1, msg.to_string());
        let count: u64 = fields[2].parse().map_err(|_| bad("bad count"))?;
        match (fields[0].is_empty(), fields[1].is_empty()) {
            (true, false) => {
                underflow = count;
                edges.push(fields[1].parse().map_err(|_| bad("bad edge"))?);
            }
            (false, true) => overflow = count,
            (false, false) => {
                let left: f64 = fields[0].parse().map_err(|_| bad("bad edge"))?;
                let right: f64 = fields[1].parse().map_err(|_| bad("bad edge"))?;
                if edges.last() != Some(&left) {
                    return Err(bad("discontinuous bins"));
                }
                edges.push(right);
                counts.push(count);
            }
            (true, true) => return Err(bad("empty bin row")),
        }
    }
    if edges.len() < 2 {
        return Err(malformed(path, 1, "no bins"));
    }
    Ok(Histogram { edges, counts, underflow, overflow })
}

pub const SUMMARY_HEADER: &str = "scenario,metric,value";

pub fn write_summary_csv(path: &Path, rows: &[(String, String, f64)]) -> Result<(), DataError> {
    let mut w = create(path)?;
    let err = io_err(path);
    (|| -> std::io::Result<()> {
        writeln!(w, "{SUMMARY_HEADER}")?;
        for (scenario, metric, value) in rows {
            writeln!(w, "{scenario},{metric},{value}")?;
        }
        w.flush()
    })()
    .map_err(err)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<(String, String, f64)>, DataError> {
    let reader = open(path)?;
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if idx == 0 {
            if line != SUMMARY_HEADER {
                return Err(malformed(path, 1, "unexpected summary header"));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(malformed(path, idx + 1, "expected 3 fields"));
        }
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| malformed(path, idx + 1, "bad value"))?;
        rows.push((fields[0].to_string(), fields[1].to_string(), value));
    }
    Ok(rows)
}

pub const REALIZATIONS_HEADER: &str = "realization,seed,events,trades,followups,max_cascade";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizationSummary {
    pub index: u32,
    pub seed: u64,
    pub events: u64,
    pub trades: u64,
    pub followups: u64,
    pub max_cascade: u64,
}

pub fn write_realizations_csv(path: &Path, rows: &[RealizationSummary]) -> Result<(), DataError> {
    let mut w = create(path)?;
    let err = io_err(path);
    (|| -> std::io::Result<()> {
        writeln!(w, "{REALIZATIONS_HEADER}")?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.index, r.seed, r.events, r.trades, r.followups, r.max_cascade
            )?;
        }
        w.flush()
    })()
    .map_err(err)
}

pub fn read_realizations_csv(path: &Path) -> Result<Vec<RealizationSummary>, DataError> {
    let reader = open(path)?;
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if idx == 0 {
            if line != REALIZATIONS_HEADER {
                return Err(malformed(path, 1, "unexpected realizations header"));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(malformed(path, idx + 1, "expected 6 fields"));
        }
        let bad = |msg: &str| malformed(path, idx + 1, msg.to_string());
        rows.push(RealizationSummary {
            index: fields[0].parse().map_err(|_| bad("bad index"))?,
            seed: fields[1].parse().map_err(|_| bad("bad seed"))?,
            events: fields[2].parse().map_err(|_| bad("bad events"))?,
            trades: fields[3].parse().map_err(|_| bad("bad trades"))?,
            followups: fields[4].parse().map_err(|_| bad("bad followups"))?,
            max_cascade: fields[5].parse().map_err(|_| bad("bad max cascade"))?,
        });
    }
    Ok(rows)
}

pub const COMPARISON_HEADER: &str = "scenario,diagnostic,x,value";

pub fn write_comparison_csv(
    path: &Path,
    rows: &[(String, &'static str, f64, f64)],
) -> Result<(), DataError> {
    let mut w = create(path)?;
    let err = io_err(path);
    (|| -> std::io::Result<()> {
        writeln!(w, "{COMPARISON_HEADER}")?;
        for (scenario, diagnostic, x, value) in rows {
            writeln!(w, "{scenario},{diagnostic},{x},{value}")?;
        }
        w.flush()
    })()
    .map_err(err)
}

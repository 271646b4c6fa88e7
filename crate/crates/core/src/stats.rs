//! The four stylized-fact diagnostics computed from an event log:
//! return distribution, absolute-return autocorrelation, trade-sign
//! autocorrelation, and inter-event-time distribution, plus histogram
//! and fitting utilities. Everything here is a pure function of its
//! inputs, so recomputing from a persisted log reproduces in-run
//! results exactly.

use thiserror::Error;

use crate::book::Side;
use crate::kernel::EventLog;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("input is empty")]
    EmptyInput,
    #[error("series contains a non-positive price")]
    NonPositivePrice,
    #[error("series is constant; the estimator's denominator is zero")]
    ConstantSeries,
    #[error("series too short: need more than {need} values, got {got}")]
    ShortSeries { need: usize, got: usize },
    #[error("need at least {need} trades after burn-in, got {got}")]
    TooFewTrades { need: usize, got: usize },
    #[error("need at least 2 events after burn-in, got {got}")]
    TooFewEvents { got: usize },
    #[error("log binning requires strictly positive values")]
    NonPositive,
    #[error("fit range contains a non-positive point at x = {x}")]
    NonPositivePoint { x: f64 },
    #[error("histogram edges must be strictly increasing")]
    BadEdges,
    #[error("fit range contains fewer than two points")]
    ShortFitRange,
    #[error("aggregation inputs have mismatched grids")]
    MismatchedGrids,
    #[error("need at least {need} values, got {got}")]
    TooFewValues { need: usize, got: usize },
}

/// A uniformly sampled series: `values[i]` is the observation at
/// `t0 + i * delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSeries {
    pub delta: f64,
    pub t0: f64,
    pub values: Vec<f64>,
}

/// Autocorrelation estimates for lags `0..=max_lag`; index is the lag.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfResult {
    pub values: Vec<f64>,
}

impl AcfResult {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    pub fn value(&self, lag: usize) -> f64 {
        self.values[lag]
    }
}

/// Counts per half-open bin `[edges[i], edges[i+1])`; out-of-range
/// values land in `underflow`/`overflow` so that in-range counts plus
/// both overflow fields always equal the sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Probability density of bin `i`, normalized by the total sample
    /// count (including out-of-range values).
    pub fn density(&self, i: usize) -> f64 {
        let width = self.edges[i + 1] - self.edges[i];
        self.counts[i] as f64 / (self.total() as f64 * width)
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        0.5 * (self.edges[i] + self.edges[i + 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    LogLog,
    SemiLogY,
}

impl FitMode {
    pub fn label(self) -> &'static str {
        match self {
            FitMode::LogLog => "log-log",
            FitMode::SemiLogY => "semilog-y",
        }
    }
}

/// Least-squares line in transformed coordinates over an explicit
/// x-range.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub mode: FitMode,
    pub x_range: (f64, f64),
    pub points_used: usize,
}

/// Sample the mid-price on the uniform grid `burn_in, burn_in + delta,
/// ..., <= horizon` by carrying the last observed mid forward. Samples
/// before any two-sided quote fall back to `initial_mid` (the tracker
/// chain's origin).
pub fn sample_midprice(
    log: &EventLog,
    delta: f64,
    burn_in: f64,
    horizon: f64,
    initial_mid: f64,
) -> Result<SampledSeries, StatsError> {
    assert!(delta > 0.0, "sampling interval must be positive");
    if log.records.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let samples = ((horizon - burn_in) / delta).floor() as usize + 1;
    let mut values = Vec::with_capacity(samples);
    let mut current = initial_mid;
    let mut next = 0usize;
    for i in 0..samples {
        let t = burn_in + i as f64 * delta;
        while next < log.records.len() && log.records[next].time <= t {
            if let Some(mid) = log.records[next].mid_after {
                current = mid;
            }
            next += 1;
        }
        values.push(current);
    }
    Ok(SampledSeries { delta, t0: burn_in, values })
}

/// Log returns r_i = ln p_{i+1} - ln p_i of a positive price series.
pub fn log_returns(series: &SampledSeries) -> Result<SampledSeries, StatsError> {
    if series.values.len() < 2 {
        return Err(StatsError::ShortSeries { need: 1, got: series.values.len() });
    }
    if series.values.iter().any(|&p| !(p > 0.0)) {
        return Err(StatsError::NonPositivePrice);
    }
    let values = series
        .values
        .windows(2)
        .map(|w| w[1].ln() - w[0].ln())
        .collect();
    Ok(SampledSeries {
        delta: series.delta,
        t0: series.t0 + series.delta,
        values,
    })
}

/// Autocorrelation with the full n-term sum of squared deviations in
/// the denominator, the (n - lag)-term product sum in the numerator,
/// and the global mean — so the lag-0 value is exactly 1.
pub fn autocorrelation(values: &[f64], max_lag: usize) -> Result<AcfResult, StatsError> {
    let n = values.len();
    if n <= max_lag {
        return Err(StatsError::ShortSeries { need: max_lag, got: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    if denom == 0.0 {
        return Err(StatsError::ConstantSeries);
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let num: f64 = centered[lag..]
            .iter()
            .zip(&centered)
            .map(|(a, b)| a * b)
            .sum();
        out.push(num / denom);
    }
    Ok(AcfResult { values: out })
}

/// Autocorrelation of |r|.
pub fn abs_return_acf(returns: &SampledSeries, max_lag: usize) -> Result<AcfResult, StatsError> {
    let abs: Vec<f64> = returns.values.iter().map(|r| r.abs()).collect();
    autocorrelation(&abs, max_lag)
}

/// Aggressor signs of the trades at or after `burn_in`, in trade order:
/// +1 buyer-initiated, -1 seller-initiated.
pub fn trade_signs(log: &EventLog, burn_in: f64) -> Vec<f64> {
    log.trades
        .iter()
        .filter(|t| t.time >= burn_in)
        .map(|t| t.aggressor_side.sign())
        .collect()
}

/// Autocorrelation of trade signs in event time: consecutive trades are
/// one step apart regardless of their timestamps.
pub fn trade_sign_acf(log: &EventLog, max_lag: usize, burn_in: f64) -> Result<AcfResult, StatsError> {
    let signs = trade_signs(log, burn_in);
    if signs.len() <= max_lag {
        return Err(StatsError::TooFewTrades { need: max_lag + 1, got: signs.len() });
    }
    autocorrelation(&signs, max_lag)
}

/// Consecutive time differences over all action records (orders and
/// cancellations alike) at or after `burn_in`. Zero entries from
/// simultaneous events are retained.
pub fn inter_event_times(log: &EventLog, burn_in: f64) -> Result<Vec<f64>, StatsError> {
    let times: Vec<f64> = log
        .records
        .iter()
        .map(|r| r.time)
        .filter(|&t| t >= burn_in)
        .collect();
    if times.len() < 2 {
        return Err(StatsError::TooFewEvents { got: times.len() });
    }
    Ok(times.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Count values into half-open bins over explicit edges.
pub fn histogram(values: &[f64], edges: &[f64]) -> Result<Histogram, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(StatsError::BadEdges);
    }
    let mut counts = vec![0u64; edges.len() - 1];
    let mut underflow = 0;
    let mut overflow = 0;
    for &v in values {
        if v < edges[0] {
            underflow += 1;
        } else if v >= edges[edges.len() - 1] {
            overflow += 1;
        } else {
            // Last edge <= v has index partition_point - 1.
            let bin = edges.partition_point(|&e| e <= v) - 1;
            counts[bin] += 1;
        }
    }
    Ok(Histogram { edges: edges.to_vec(), counts, underflow, overflow })
}

/// Uniform edges: `bins` bins spanning `[lo, hi]`.
pub fn linear_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    assert!(bins >= 1 && hi > lo);
    (0..=bins)
        .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
        .collect()
}

/// Edges on the global logarithmic grid 10^(k / bins_per_decade),
/// integer k, covering `[lo, hi]`. The grid is anchored at 1, so edges
/// from different data ranges always align.
pub fn log_edges(lo: f64, hi: f64, bins_per_decade: u32) -> Vec<f64> {
    assert!(bins_per_decade >= 1 && lo > 0.0 && hi >= lo);
    let bpd = bins_per_decade as f64;
    let mut k_lo = (bpd * lo.log10()).floor() as i64;
    let mut k_hi = (bpd * hi.log10()).ceil() as i64;
    // Guard the grid against rounding at the extremes.
    while 10f64.powf(k_lo as f64 / bpd) > lo {
        k_lo -= 1;
    }
    while 10f64.powf(k_hi as f64 / bpd) <= hi {
        k_hi += 1;
    }
    (k_lo..=k_hi).map(|k| 10f64.powf(k as f64 / bpd)).collect()
}

/// Histogram on the global logarithmic grid covering the data range.
/// All values must be strictly positive.
pub fn log_binned_histogram(values: &[f64], bins_per_decade: u32) -> Result<Histogram, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(StatsError::NonPositive);
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let edges = log_edges(lo, hi, bins_per_decade);
    histogram(values, &edges)
}

/// Moment-matched Gaussian: sample mean and (population) standard
/// deviation.
pub fn gaussian_moment_fit(values: &[f64]) -> Result<(f64, f64), StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Excess kurtosis m4 / m2^2 - 3 with central moments normalized by n.
pub fn excess_kurtosis(values: &[f64]) -> Result<f64, StatsError> {
    if values.len() < 4 {
        return Err(StatsError::TooFewValues { need: 4, got: values.len() });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    if m2 == 0.0 {
        return Err(StatsError::ConstantSeries);
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

/// Ordinary least squares on transformed coordinates over the points
/// with `x_lo <= x <= x_hi`. In log-log mode both coordinates must be
/// strictly positive inside the range; callers exclude offending points
/// by narrowing the range, never by silent dropping.
fn linear_fit(
    points: &[(f64, f64)],
    x_lo: f64,
    x_hi: f64,
    mode: FitMode,
) -> Result<TailFit, StatsError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(x, y) in points {
        if x < x_lo || x > x_hi {
            continue;
        }
        let (tx, ty) = match mode {
            FitMode::LogLog => {
                if !(x > 0.0 && y > 0.0) {
                    return Err(StatsError::NonPositivePoint { x });
                }
                (x.ln(), y.ln())
            }
            FitMode::SemiLogY => {
                if !(y > 0.0) {
                    return Err(StatsError::NonPositivePoint { x });
                }
                (x, y.ln())
            }
        };
        xs.push(tx);
        ys.push(ty);
    }
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::ShortFitRange);
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(TailFit {
        slope,
        intercept: my - slope * mx,
        mode,
        x_range: (x_lo, x_hi),
        points_used: n,
    })
}

/// Power-law fit: OLS on (ln x, ln y); the slope estimates the exponent.
pub fn loglog_linear_fit(points: &[(f64, f64)], x_lo: f64, x_hi: f64) -> Result<TailFit, StatsError> {
    linear_fit(points, x_lo, x_hi, FitMode::LogLog)
}

/// Exponential-tail fit: OLS on (x, ln y).
pub fn semilogy_linear_fit(points: &[(f64, f64)], x_lo: f64, x_hi: f64) -> Result<TailFit, StatsError> {
    linear_fit(points, x_lo, x_hi, FitMode::SemiLogY)
}

/// Per-lag arithmetic mean over realizations.
pub fn average_acf(acfs: &[AcfResult]) -> Result<AcfResult, StatsError> {
    let first = acfs.first().ok_or(StatsError::EmptyInput)?;
    if acfs.iter().any(|a| a.values.len() != first.values.len()) {
        return Err(StatsError::MismatchedGrids);
    }
    let mut values = vec![0.0; first.values.len()];
    for acf in acfs {
        for (v, a) in values.iter_mut().zip(&acf.values) {
            *v += a;
        }
    }
    for v in &mut values {
        *v /= acfs.len() as f64;
    }
    Ok(AcfResult { values })
}

/// Sum counts across realizations; edges must match exactly.
pub fn pool_histograms(hists: &[Histogram]) -> Result<Histogram, StatsError> {
    let first = hists.first().ok_or(StatsError::EmptyInput)?;
    if hists.iter().any(|h| h.edges != first.edges) {
        return Err(StatsError::MismatchedGrids);
    }
    let mut pooled = Histogram {
        edges: first.edges.clone(),
        counts: vec![0; first.counts.len()],
        underflow: 0,
        overflow: 0,
    };
    for h in hists {
        for (p, c) in pooled.counts.iter_mut().zip(&h.counts) {
            *p += c;
        }
        pooled.underflow += h.underflow;
        pooled.overflow += h.overflow;
    }
    Ok(pooled)
}

/// Empirical survival probability P(X > threshold).
pub fn survival_at(values: &[f64], threshold: f64) -> f64 {
    values.iter().filter(|&&v| v > threshold).count() as f64 / values.len() as f64
}

/// Extract the per-trade sign series as a checkable type.
pub fn sign_series(log: &EventLog, burn_in: f64) -> Vec<Side> {
    log.trades
        .iter()
        .filter(|t| t.time >= burn_in)
        .map(|t| t.aggressor_side)
        .collect()
}

//! Every random draw an individual agent makes: exponential waiting
//! times, uniform direction, Gaussian volume, log-normal limit price,
//! and the uniform cancellation pick. All samplers are pure functions
//! of an explicit rng handle; nothing here reads market state. The only
//! coupling to the market is the caller multiplying the log-price
//! draw into the current mid.

use std::collections::HashMap;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::book::{OrderId, Side, TickPrice};

/// Behavioral parameters, identical for all agents in a run. The
/// `lambda_*` values are mean waiting times in simulation time units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentParams {
    /// Mean waiting time between market-order source actions.
    pub lambda_market: f64,
    /// Mean waiting time between limit-order source actions.
    pub lambda_limit: f64,
    /// Mean waiting time between cancellation source actions.
    pub lambda_cancel: f64,
    /// Mean follow-up delay for spreading.
    pub lambda_follow: f64,
    /// Mean order volume in shares.
    pub mean_volume: f64,
    /// Standard deviation of order volume.
    pub stddev_volume: f64,
    /// Price dispersion in price units at the reference price.
    pub price_dispersion: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        AgentParams {
            lambda_market: 20_000.0,
            lambda_limit: 5_000.0,
            lambda_cancel: 40_000.0,
            lambda_follow: 1_000.0,
            mean_volume: 5.0,
            stddev_volume: 1.5,
            price_dispersion: 2.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("agent parameter {name} must be strictly positive, got {value}")]
pub struct ParamError {
    pub name: &'static str,
    pub value: f64,
}

impl AgentParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let fields = [
            ("lambda_market", self.lambda_market),
            ("lambda_limit", self.lambda_limit),
            ("lambda_cancel", self.lambda_cancel),
            ("lambda_follow", self.lambda_follow),
            ("mean_volume", self.mean_volume),
            ("stddev_volume", self.stddev_volume),
            ("price_dispersion", self.price_dispersion),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ParamError { name, value });
            }
        }
        Ok(())
    }

    /// Standard deviation of the zero-centered Gaussian on log-price.
    /// Frozen at run start from the initial reference price, so the
    /// price law stays market-independent as the mid drifts.
    pub fn sigma_log(&self, reference_price: f64) -> f64 {
        self.price_dispersion / reference_price
    }
}

/// The resting orders an agent currently owns; the kernel keeps this in
/// sync with the book on fills and cancellations.
#[derive(Debug, Clone)]
pub struct AgentState {
    agent: u32,
    active: Vec<OrderId>,
    slot: HashMap<OrderId, usize>,
}

impl AgentState {
    pub fn new(agent: u32) -> Self {
        AgentState {
            agent,
            active: Vec::new(),
            slot: HashMap::new(),
        }
    }

    pub fn agent(&self) -> u32 {
        self.agent
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn contains(&self, id: OrderId) -> bool {
        self.slot.contains_key(&id)
    }

    pub fn insert(&mut self, id: OrderId) {
        debug_assert!(!self.contains(id));
        self.slot.insert(id, self.active.len());
        self.active.push(id);
    }

    pub fn remove(&mut self, id: OrderId) {
        if let Some(pos) = self.slot.remove(&id) {
            self.active.swap_remove(pos);
            if let Some(&moved) = self.active.get(pos) {
                self.slot.insert(moved, pos);
            }
        }
    }

    /// Uniform pick among the agent's resting orders; `None` when there
    /// is nothing to cancel.
    pub fn pick_cancellation_target<R: RngCore + ?Sized>(&self, rng: &mut R) -> Option<OrderId> {
        if self.active.is_empty() {
            return None;
        }
        let idx = rng.random_range(0..self.active.len());
        Some(self.active[idx])
    }
}

/// Uniform draw on [0, 1) with 53-bit precision; consumes exactly one
/// `next_u64`. Fixed here (instead of relying on rand internals) so the
/// spreading protocol's draw pattern is stable and scriptable.
pub fn standard_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw on the open interval (0, 1); one `next_u64`.
fn open_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Exponential waiting time with the given mean, by inversion. Strictly
/// positive; consumes exactly one `next_u64`.
pub fn sample_waiting_time<R: RngCore + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    debug_assert!(mean > 0.0);
    -mean * open_uniform(rng).ln()
}

/// Bid or ask with probability 1/2 each.
pub fn sample_direction<R: RngCore + ?Sized>(rng: &mut R) -> Side {
    if standard_uniform(rng) < 0.5 {
        Side::Bid
    } else {
        Side::Ask
    }
}

/// Rounds a Gaussian volume draw to the closest integer, never below
/// one share. Rounding is half-away-from-zero (`f64::round`).
pub(crate) fn volume_from_gaussian(g: f64) -> u64 {
    g.round().max(1.0) as u64
}

/// Order volume: round(Normal(mean_volume, stddev_volume)), clamped to >= 1.
pub fn sample_volume<R: Rng + ?Sized>(params: &AgentParams, rng: &mut R) -> u64 {
    let normal = Normal::new(params.mean_volume, params.stddev_volume).expect("validated params");
    volume_from_gaussian(normal.sample(rng))
}

/// Log-normal limit price around the reference mid, rounded to the
/// closest tick and clamped to one tick.
pub(crate) fn price_from_multiplier(reference_mid: f64, g: f64, tick_size: f64) -> TickPrice {
    let price = reference_mid * g.exp();
    let ticks = (price / tick_size).round().max(1.0) as u64;
    TickPrice(ticks)
}

/// Limit price: reference_mid * exp(g) with g ~ Normal(0, sigma_log).
/// The same law serves both sides.
pub fn sample_limit_price<R: Rng + ?Sized>(
    reference_mid: f64,
    sigma_log: f64,
    tick_size: f64,
    rng: &mut R,
) -> TickPrice {
    debug_assert!(reference_mid > 0.0);
    let normal = Normal::new(0.0, sigma_log).expect("sigma_log positive");
    price_from_multiplier(reference_mid, normal.sample(rng), tick_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn default_params_validate() {
        AgentParams::default().validate().unwrap();
        let mut p = AgentParams::default();
        p.lambda_limit = 0.0;
        assert_eq!(p.validate().unwrap_err().name, "lambda_limit");
    }

    #[test]
    fn waiting_time_mean_matches() {
        let mut r = rng(1);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        for _ in 0..n {
            let dt = sample_waiting_time(5000.0, &mut r);
            sum += dt;
            min = min.min(dt);
        }
        let mean = sum / n as f64;
        assert!((mean - 5000.0).abs() / 5000.0 < 0.01, "mean {mean}");
        assert!(min > 0.0);
    }

    #[test]
    fn waiting_time_survival_matches_closed_form() {
        let mut r = rng(2);
        let n = 1_000_000;
        let over = (0..n)
            .filter(|_| sample_waiting_time(5000.0, &mut r) > 5000.0)
            .count();
        let frac = over as f64 / n as f64;
        let expect = (-1.0f64).exp();
        assert!((frac - expect).abs() / expect < 0.01, "survival {frac}");
    }

    #[test]
    fn direction_is_balanced_and_reproducible() {
        let mut r = rng(3);
        let n = 1_000_000;
        let bids = (0..n).filter(|_| sample_direction(&mut r) == Side::Bid).count();
        let frac = bids as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.002, "bid fraction {frac}");

        let a: Vec<Side> = (0..100).map(|_| sample_direction(&mut rng(4))).collect();
        let b: Vec<Side> = (0..100).map(|_| sample_direction(&mut rng(4))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn volume_rounding_and_clamping() {
        assert_eq!(volume_from_gaussian(-0.2), 1);
        assert_eq!(volume_from_gaussian(5.4), 5);
        assert_eq!(volume_from_gaussian(5.5), 6);
        assert_eq!(volume_from_gaussian(0.49), 1);
        assert_eq!(volume_from_gaussian(1.5), 2);
    }

    /// Mean of max(1, round(G)) for G ~ Normal(m, s), by Simpson
    /// quadrature over the density. Independent of the sampler.
    fn clamped_rounded_mean(m: f64, s: f64) -> f64 {
        let density = |x: f64| {
            let z = (x - m) / s;
            (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
        };
        let f = |x: f64| (x.round().max(1.0)) * density(x);
        let (lo, hi) = (m - 10.0 * s, m + 10.0 * s);
        let steps = 200_000;
        let h = (hi - lo) / steps as f64;
        let mut sum = f(lo) + f(hi);
        for i in 1..steps {
            let x = lo + i as f64 * h;
            sum += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
        }
        sum * h / 3.0
    }

    #[test]
    fn volume_mean_matches_quadrature_oracle() {
        let params = AgentParams::default();
        let expect = clamped_rounded_mean(5.0, 1.5);
        let mut r = rng(5);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_volume(&params, &mut r) as f64).sum::<f64>() / n as f64;
        assert!((mean - expect).abs() / expect < 0.01, "mean {mean} vs oracle {expect}");
    }

    #[test]
    fn price_identity_multiplier_rounds_to_tick() {
        assert_eq!(price_from_multiplier(100.0, 0.0, 0.01), TickPrice(10_000));
        assert_eq!(price_from_multiplier(98.44, 0.0, 0.1), TickPrice(984));
    }

    #[test]
    fn price_clamps_at_one_tick() {
        assert_eq!(price_from_multiplier(0.013, -5.0, 0.01), TickPrice(1));
    }

    #[test]
    fn price_is_scale_covariant_before_rounding() {
        for &g in &[-0.03, 0.0, 0.011, 0.04] {
            let single = 100.0 * f64::exp(g);
            let double = 200.0 * f64::exp(g);
            assert!((double - 2.0 * single).abs() < 1e-9);
        }
    }

    #[test]
    fn price_stddev_matches_lognormal_moments() {
        // SD of 100*exp(g), g ~ N(0, 0.02): 100*sqrt(e^{2s^2} - e^{s^2}).
        let sigma = 0.02f64;
        let expect = 100.0 * ((2.0 * sigma * sigma).exp() - (sigma * sigma).exp()).sqrt();
        let mut r = rng(6);
        let n = 1_000_000;
        let prices: Vec<f64> = (0..n)
            .map(|_| sample_limit_price(100.0, sigma, 0.01, &mut r).to_price(0.01))
            .collect();
        let mean = prices.iter().sum::<f64>() / n as f64;
        let sd = (prices.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((sd - expect).abs() / expect < 0.02, "sd {sd} vs {expect}");
    }

    #[test]
    fn cancellation_pick_is_uniform() {
        let mut state = AgentState::new(0);
        let mut r = rng(7);
        assert_eq!(state.pick_cancellation_target(&mut r), None);

        state.insert(OrderId(42));
        for _ in 0..10 {
            assert_eq!(state.pick_cancellation_target(&mut r), Some(OrderId(42)));
        }

        state.insert(OrderId(43));
        state.insert(OrderId(44));
        let mut counts = HashMap::new();
        let n = 300_000;
        for _ in 0..n {
            let id = state.pick_cancellation_target(&mut r).unwrap();
            *counts.entry(id).or_insert(0u64) += 1;
        }
        for id in [42, 43, 44] {
            let frac = counts[&OrderId(id)] as f64 / n as f64;
            assert!((frac - 1.0 / 3.0).abs() < 0.01, "order {id} frac {frac}");
        }
    }

    #[test]
    fn state_remove_keeps_slots_consistent() {
        let mut state = AgentState::new(0);
        for i in 0..5 {
            state.insert(OrderId(i));
        }
        state.remove(OrderId(1));
        state.remove(OrderId(4));
        state.remove(OrderId(4)); // second removal is a no-op
        assert_eq!(state.len(), 3);
        for id in [0, 2, 3] {
            assert!(state.contains(OrderId(id)));
        }
        let mut r = rng(8);
        for _ in 0..100 {
            let picked = state.pick_cancellation_target(&mut r).unwrap();
            assert!(state.contains(picked));
        }
    }

    #[test]
    fn sigma_log_uses_reference_price() {
        let p = AgentParams::default();
        assert!((p.sigma_log(100.0) - 0.02).abs() < 1e-15);
    }
}

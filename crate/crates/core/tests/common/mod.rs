//! Shared test apparatus: a brute-force reference matcher, a scriptable
//! rng, Kolmogorov-Smirnov helpers, a Galton-Watson sampler, and an
//! implicit balanced-tree topology too large to materialize.

#![allow(dead_code)]

use std::collections::VecDeque;

use rand::{Rng, RngCore};

use lobnet_core::book::Side;
use lobnet_core::kernel::Topology;

/// Independent price-time-priority matcher that rescans the entire
/// order list for every message. Deliberately naive: no indexes, no
/// level structure, nothing shared with the production book.
pub struct RefEngine {
    orders: Vec<RefOrder>,
    next_id: u64,
}

struct RefOrder {
    id: u64,
    side: Side,
    price: u64,
    remaining: u64,
    alive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefTrade {
    pub price: u64,
    pub volume: u64,
    pub maker: u64,
    pub aggressor: Side,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefReport {
    pub trades: Vec<RefTrade>,
    pub resting: Option<u64>,
    pub discarded: u64,
}

impl RefEngine {
    pub fn new() -> Self {
        RefEngine { orders: Vec::new(), next_id: 0 }
    }

    /// Index of the best alive opposite order that satisfies `limit`,
    /// by full scan: best price first, then earliest submission (ids
    /// are issued in submission order).
    fn best_opposite(&self, aggressor: Side, limit: Option<u64>) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, o) in self.orders.iter().enumerate() {
            if !o.alive || o.side != aggressor.opposite() {
                continue;
            }
            let satisfies = match (aggressor, limit) {
                (_, None) => true,
                (Side::Bid, Some(l)) => o.price <= l,
                (Side::Ask, Some(l)) => o.price >= l,
            };
            if !satisfies {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(j) => {
                    let b = &self.orders[j];
                    let o_key = (o.price, o.id);
                    let b_key = (b.price, b.id);
                    let o_better = match aggressor {
                        Side::Bid => o_key < b_key,
                        Side::Ask => (o.price > b.price) || (o.price == b.price && o.id < b.id),
                    };
                    if o_better {
                        Some(i)
                    } else {
                        Some(j)
                    }
                }
            };
        }
        best
    }

    fn execute(&mut self, aggressor: Side, limit: Option<u64>, mut volume: u64) -> Vec<RefTrade> {
        let mut trades = Vec::new();
        while volume > 0 {
            let Some(i) = self.best_opposite(aggressor, limit) else { break };
            let maker = &mut self.orders[i];
            let traded = volume.min(maker.remaining);
            maker.remaining -= traded;
            volume -= traded;
            if maker.remaining == 0 {
                maker.alive = false;
            }
            trades.push(RefTrade { price: maker.price, volume: traded, maker: maker.id, aggressor });
        }
        trades
    }

    pub fn submit_limit(&mut self, side: Side, price: u64, volume: u64) -> RefReport {
        let id = self.next_id;
        self.next_id += 1;
        let trades = self.execute(side, Some(price), volume);
        let filled: u64 = trades.iter().map(|t| t.volume).sum();
        let mut resting = None;
        if filled < volume {
            self.orders.push(RefOrder { id, side, price, remaining: volume - filled, alive: true });
            resting = Some(id);
        }
        RefReport { trades, resting, discarded: 0 }
    }

    pub fn submit_market(&mut self, side: Side, volume: u64) -> RefReport {
        let trades = self.execute(side, None, volume);
        let filled: u64 = trades.iter().map(|t| t.volume).sum();
        RefReport { trades, resting: None, discarded: volume - filled }
    }

    pub fn cancel(&mut self, id: u64) -> Option<u64> {
        let order = self.orders.iter_mut().find(|o| o.id == id && o.alive)?;
        order.alive = false;
        Some(order.remaining)
    }

    /// (side, price, total volume, order count) aggregation: bids from
    /// best down, then asks from best up — the book's snapshot order.
    pub fn depth(&self) -> Vec<(Side, u64, u64, u32)> {
        let mut levels: std::collections::BTreeMap<(u8, i64), (u64, u32)> = Default::default();
        for o in &self.orders {
            if !o.alive {
                continue;
            }
            let key = match o.side {
                Side::Bid => (0u8, -(o.price as i64)),
                Side::Ask => (1u8, o.price as i64),
            };
            let e = levels.entry(key).or_insert((0, 0));
            e.0 += o.remaining;
            e.1 += 1;
        }
        levels
            .into_iter()
            .map(|((s, p), (vol, n))| {
                let side = if s == 0 { Side::Bid } else { Side::Ask };
                let price = if s == 0 { (-p) as u64 } else { p as u64 };
                (side, price, vol, n)
            })
            .collect()
    }
}

/// RngCore that replays a fixed list of u64 draws. Exhausting the
/// script panics, which pins the exact number of draws consumed.
pub struct ScriptedRng {
    values: VecDeque<u64>,
}

impl ScriptedRng {
    pub fn new(values: Vec<u64>) -> Self {
        ScriptedRng { values: values.into() }
    }

    pub fn remaining(&self) -> usize {
        self.values.len()
    }
}

impl RngCore for ScriptedRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.values.pop_front().expect("scripted rng exhausted")
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// A follow decision draw that always accepts (uniform 0.0 < q).
pub const SCRIPT_FOLLOW: u64 = 0;
/// A follow decision draw that always declines for q < 1.
pub const SCRIPT_DECLINE: u64 = u64::MAX;

/// One-sample Kolmogorov-Smirnov statistic against Exp(mean).
pub fn ks_statistic_exponential(values: &[f64], mean: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = 1.0 - (-x / mean).exp();
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i as f64 + 1.0) / n - f).abs());
    }
    d
}

/// Critical value of the KS statistic at significance 0.01 (asymptotic
/// with the standard small-sample correction).
pub fn ks_critical_001(n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    1.62762 / (sqrt_n + 0.12 + 0.11 / sqrt_n)
}

/// Total progeny of a Galton-Watson branching process whose root bears
/// Binomial(b, q) children and every later individual Binomial(b-1, q).
pub fn galton_watson_size<R: Rng + ?Sized>(b: u32, q: f64, rng: &mut R) -> u64 {
    let binomial = |n: u32, rng: &mut R| -> u64 {
        (0..n).filter(|_| rng.random::<f64>() < q).count() as u64
    };
    let mut size = 1u64;
    let mut frontier = binomial(b, rng);
    while frontier > 0 {
        frontier -= 1;
        size += 1;
        frontier += binomial(b - 1, rng);
    }
    size
}

/// Total variation distance between two empirical distributions over
/// integer outcomes.
pub fn tv_distance(a: &[u64], b: &[u64]) -> f64 {
    use std::collections::BTreeMap;
    let mut pa: BTreeMap<u64, f64> = BTreeMap::new();
    let mut pb: BTreeMap<u64, f64> = BTreeMap::new();
    for &x in a {
        *pa.entry(x).or_default() += 1.0 / a.len() as f64;
    }
    for &x in b {
        *pb.entry(x).or_default() += 1.0 / b.len() as f64;
    }
    let keys: std::collections::BTreeSet<u64> = pa.keys().chain(pb.keys()).copied().collect();
    0.5 * keys
        .into_iter()
        .map(|k| (pa.get(&k).copied().unwrap_or(0.0) - pb.get(&k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Rooted tree in which every node has degree `b` (the root has `b`
/// children, inner nodes `b - 1`), truncated at `depth`. Neighbors are
/// computed arithmetically from a breadth-first numbering, so the
/// depth-10 branching-8 tree (~3.8e8 nodes) costs no memory.
pub struct BalancedTree {
    b: u64,
    depth: u32,
    /// offsets[d] = index of the first node at depth d; one past-the-end
    /// sentinel at the end.
    offsets: Vec<u64>,
}

impl BalancedTree {
    pub fn new(b: u32, depth: u32) -> Self {
        assert!(b >= 2 && depth >= 1);
        let b = b as u64;
        let mut offsets = vec![0u64, 1];
        let mut level = b;
        for _ in 1..=depth {
            offsets.push(offsets.last().unwrap() + level);
            level *= b - 1;
        }
        BalancedTree { b, depth, offsets }
    }

    fn depth_of(&self, node: u64) -> u32 {
        (self.offsets.partition_point(|&o| o <= node) - 1) as u32
    }

    fn parent(&self, node: u64) -> u64 {
        let d = self.depth_of(node);
        let j = node - self.offsets[d as usize];
        if d == 1 {
            0
        } else {
            self.offsets[d as usize - 1] + j / (self.b - 1)
        }
    }
}

impl Topology for BalancedTree {
    fn node_count(&self) -> u64 {
        *self.offsets.last().unwrap()
    }

    fn for_each_neighbor(&self, node: u32, visit: &mut dyn FnMut(u32)) {
        let node = node as u64;
        let d = self.depth_of(node);
        if d > 0 {
            visit(self.parent(node) as u32);
        }
        if d < self.depth {
            let (first, fanout) = if d == 0 {
                (1, self.b)
            } else {
                let j = node - self.offsets[d as usize];
                (self.offsets[d as usize + 1] + j * (self.b - 1), self.b - 1)
            };
            for c in first..first + fanout {
                visit(c as u32);
            }
        }
    }
}

#[cfg(test)]
mod self_tests {
    use super::*;

    #[test]
    fn balanced_tree_shape() {
        let tree = BalancedTree::new(3, 2);
        // Root 0; depth 1: 1..=3; depth 2: 4..=9.
        assert_eq!(tree.node_count(), 10);
        let neighbors = |v: u32| {
            let mut out = Vec::new();
            tree.for_each_neighbor(v, &mut |n| out.push(n));
            out
        };
        assert_eq!(neighbors(0), vec![1, 2, 3]);
        assert_eq!(neighbors(1), vec![0, 4, 5]);
        assert_eq!(neighbors(3), vec![0, 8, 9]);
        assert_eq!(neighbors(9), vec![3]);
    }
}

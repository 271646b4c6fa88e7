//! The production book against the brute-force reference matcher, plus
//! the book-level conservation and no-cross properties, over random
//! message sequences.

mod common;

use std::collections::HashMap;

use proptest::prelude::*;

use common::RefEngine;
use lobnet_core::book::{BookError, OrderBook, OrderId, Side, TickPrice};

#[derive(Debug, Clone)]
enum Message {
    Limit { side: Side, price: u64, volume: u64 },
    Market { side: Side, volume: u64 },
    /// Cancel the k-th issued order id (mod the number issued so far).
    Cancel { pick: usize },
}

fn side_strategy() -> impl Strategy<Value = Side> {
    prop_oneof![Just(Side::Bid), Just(Side::Ask)]
}

fn message_strategy() -> impl Strategy<Value = Message> {
    prop_oneof![
        4 => (side_strategy(), 9_950u64..10_050, 1u64..10)
            .prop_map(|(side, price, volume)| Message::Limit { side, price, volume }),
        3 => (side_strategy(), 1u64..15).prop_map(|(side, volume)| Message::Market { side, volume }),
        3 => any::<usize>().prop_map(|pick| Message::Cancel { pick }),
    ]
}

/// Drive both engines with the same messages, asserting identical
/// behavior after every message and conservation at the end.
fn check_equivalence(messages: &[Message]) {
    let mut book = OrderBook::new(0.01);
    let mut oracle = RefEngine::new();
    let mut issued: Vec<OrderId> = Vec::new();

    // Volume ledger per order id.
    let mut submitted: HashMap<u64, u64> = HashMap::new();
    let mut instant_fill: HashMap<u64, u64> = HashMap::new();
    let mut maker_fill: HashMap<u64, u64> = HashMap::new();
    let mut cancelled: HashMap<u64, u64> = HashMap::new();

    for (i, message) in messages.iter().enumerate() {
        let time = i as f64;
        match *message {
            Message::Limit { side, price, volume } => {
                let report = book
                    .submit_limit(0, side, TickPrice(price), volume, time)
                    .expect("valid message");
                let expect = oracle.submit_limit(side, price, volume);
                assert_eq!(report.trades.len(), expect.trades.len(), "message {i}");
                for (got, want) in report.trades.iter().zip(&expect.trades) {
                    assert_eq!(got.price.0, want.price, "message {i}");
                    assert_eq!(got.volume, want.volume, "message {i}");
                    assert_eq!(got.maker_order.0, want.maker, "message {i}");
                    assert_eq!(got.aggressor_side, want.aggressor, "message {i}");
                    *maker_fill.entry(want.maker).or_default() += want.volume;
                }
                assert_eq!(report.resting_order.map(|id| id.0), expect.resting, "message {i}");
                let id = issued.len() as u64;
                issued.push(OrderId(id));
                submitted.insert(id, volume);
                instant_fill.insert(id, report.trades.iter().map(|t| t.volume).sum());
            }
            Message::Market { side, volume } => {
                let report = book.submit_market(0, side, volume, time).expect("valid message");
                let expect = oracle.submit_market(side, volume);
                let got: Vec<(u64, u64, u64)> = report
                    .trades
                    .iter()
                    .map(|t| (t.price.0, t.volume, t.maker_order.0))
                    .collect();
                let want: Vec<(u64, u64, u64)> =
                    expect.trades.iter().map(|t| (t.price, t.volume, t.maker)).collect();
                assert_eq!(got, want, "message {i}");
                assert_eq!(report.discarded_volume, expect.discarded, "message {i}");
                for t in &expect.trades {
                    *maker_fill.entry(t.maker).or_default() += t.volume;
                }
            }
            Message::Cancel { pick } => {
                if issued.is_empty() {
                    continue;
                }
                let id = issued[pick % issued.len()];
                let got = book.cancel(id);
                let want = oracle.cancel(id.0);
                match (got, want) {
                    (Ok(v), Some(w)) => {
                        assert_eq!(v, w, "message {i}");
                        cancelled.insert(id.0, v);
                    }
                    (Err(BookError::OrderGone), None) => {}
                    (got, want) => panic!("message {i}: cancel mismatch {got:?} vs {want:?}"),
                }
            }
        }

        // Never crossed at rest, after every message.
        let quotes = book.quotes();
        if let (Some(b), Some(a)) = (quotes.best_bid, quotes.best_ask) {
            assert!(b < a, "crossed book after message {i}");
        }

        // Identical aggregated depth.
        let got: Vec<(Side, u64, u64, u32)> = book
            .depth_snapshot()
            .into_iter()
            .map(|l| (l.side, l.price.0, l.volume, l.orders))
            .collect();
        assert_eq!(got, oracle.depth(), "depth after message {i}");
    }

    // Volume conservation: submitted = executed + resting + cancelled.
    for (&id, &vol) in &submitted {
        let resting = book.order(OrderId(id)).map_or(0, |o| o.remaining_volume);
        let total = instant_fill[&id]
            + maker_fill.get(&id).copied().unwrap_or(0)
            + cancelled.get(&id).copied().unwrap_or(0)
            + resting;
        assert_eq!(total, vol, "order {id} volume not conserved");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn book_matches_brute_force_oracle(messages in prop::collection::vec(message_strategy(), 1..250)) {
        check_equivalence(&messages);
    }
}

#[test]
fn narrow_price_band_forces_heavy_crossing() {
    // Two-tick band: nearly every limit is marketable.
    let mut messages = Vec::new();
    let mut state = 88172645463325252u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    for _ in 0..2_000 {
        let side = if next() % 2 == 0 { Side::Bid } else { Side::Ask };
        match next() % 10 {
            0..=4 => messages.push(Message::Limit {
                side,
                price: 10_000 + next() % 2,
                volume: 1 + next() % 9,
            }),
            5..=7 => messages.push(Message::Market { side, volume: 1 + next() % 12 }),
            _ => messages.push(Message::Cancel { pick: next() as usize }),
        }
    }
    check_equivalence(&messages);
}

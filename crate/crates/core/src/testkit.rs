//! Helpers for building synthetic frames and frame streams in tests and
//! benchmarks.

use std::collections::BTreeMap;

use crate::frame::Rdf;
use crate::ladder::{Price, Tick, TickLadder};
use crate::money::Money;

fn ladder() -> TickLadder {
    TickLadder::betfair()
}

pub fn tick(price: &str) -> Tick {
    ladder().tick_index(Price::parse(price).unwrap()).unwrap()
}

fn side(entries: &[(&str, f64)]) -> BTreeMap<Tick, Money> {
    entries.iter().map(|&(p, a)| (tick(p), Money::from_f64(a))).collect()
}

/// Builds one frame from price/amount literals.
pub fn frame(
    timestamp_ms: i64,
    last_traded: &str,
    bid: &[(&str, f64)],
    ask: &[(&str, f64)],
    traded: &[(&str, f64)],
) -> Rdf {
    Rdf {
        timestamp_ms,
        last_traded: tick(last_traded),
        bid: side(bid),
        ask: side(ask),
        traded: side(traded),
    }
}

/// The worked market-depth snapshot used throughout the module tests:
/// bids at 4.5/4.4/4.3/4.2/4.1/4.0 and asks at 4.6/4.7/4.8/5.0, last
/// traded 4.6.
pub fn table1_frame() -> Rdf {
    frame(
        0,
        "4.6",
        &[
            ("4.5", 8.0),
            ("4.4", 2.0),
            ("4.3", 10.0),
            ("4.2", 448.0),
            ("4.1", 398.0),
            ("4.0", 335.0),
        ],
        &[("4.6", 349.0), ("4.7", 148.0), ("4.8", 263.0), ("5.0", 250.0)],
        &[
            ("4.3", 4.0),
            ("4.4", 23.0),
            ("4.5", 217.0),
            ("4.6", 76.0),
            ("4.7", 70.0),
            ("4.8", 24.0),
            ("4.9", 68.0),
            ("5.0", 93.0),
            ("5.1", 20.0),
        ],
    )
}

/// A flat, liquid market at `price` with generous depth on both sides,
/// useful as filler around scripted moves.
pub fn flat_frame(timestamp_ms: i64, price: &str, depth_amount: f64) -> Rdf {
    let l = ladder();
    let at = tick(price);
    let mut bid = BTreeMap::new();
    let mut ask = BTreeMap::new();
    for d in 1..=4i64 {
        if at.0 - d >= 0 {
            bid.insert(Tick(at.0 - d), Money::from_f64(depth_amount));
        }
        if l.contains_tick(Tick(at.0 + d)) {
            ask.insert(Tick(at.0 + d), Money::from_f64(depth_amount));
        }
    }
    Rdf { timestamp_ms, last_traded: at, bid, ask, traded: BTreeMap::new() }
}

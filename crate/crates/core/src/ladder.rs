//! The discrete odds ladder.
//!
//! Every price a bet can trade at lives on a banded ladder of decimal odds.
//! Prices are held as exact hundredths (`Price`) and positions on the ladder
//! as integer indices (`Tick`); one tick is a single step of the ladder.
//! All mechanism and settlement arithmetic works in ticks, converting to
//! decimal odds only at I/O boundaries.

use serde::{Deserialize, Serialize};

/// Decimal odds in exact hundredths (4.60 is stored as 460).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Price(pub i64);

impl Price {
    pub fn from_hundredths(h: i64) -> Price {
        Price(h)
    }

    /// Parses decimal odds text such as `"4.6"`, `"3.95"` or `"2"`.
    pub fn parse(text: &str) -> Result<Price, LadderError> {
        let text = text.trim();
        let bad = || LadderError::BadPrice(text.to_string());
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int_part.is_empty() || frac_part.len() > 2 {
            return Err(bad());
        }
        let mut h: i64 = 0;
        for c in int_part.chars() {
            h = h * 10 + c.to_digit(10).ok_or_else(bad)? as i64;
        }
        h *= 100;
        let mut scale = 10;
        for c in frac_part.chars() {
            h += c.to_digit(10).ok_or_else(bad)? as i64 * scale;
            scale /= 10;
        }
        Ok(Price(h))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    /// Canonical text form with trailing zeros trimmed (`4.6`, `3.95`, `2`).
    pub fn to_plain_string(self) -> String {
        let pounds = self.0 / 100;
        let frac = self.0 % 100;
        if frac == 0 {
            format!("{pounds}")
        } else if frac % 10 == 0 {
            format!("{pounds}.{}", frac / 10)
        } else {
            format!("{pounds}.{frac:02}")
        }
    }
}

impl std::fmt::Display for Price {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_plain_string())
    }
}

/// Zero-based position on a [`TickLadder`].
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Tick(pub i64);

impl Tick {
    pub fn offset(self, ticks: i64) -> Tick {
        Tick(self.0 + ticks)
    }
}

/// One contiguous price band with a constant step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Band {
    /// Lowest price of the band, inclusive.
    pub low: Price,
    /// Highest price of the band, inclusive.
    pub high: Price,
    /// Step between adjacent prices in the band.
    pub step: Price,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LadderError {
    #[error("price {0} is not on the ladder")]
    OffLadderPrice(Price),
    #[error("tick index {0} is outside the ladder range")]
    IndexOutOfRange(i64),
    #[error("unparseable price: {0:?}")]
    BadPrice(String),
    #[error("invalid band table: {0}")]
    BadBands(String),
}

/// Banded price scale mapping every representable price to one tick index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<Band>", try_from = "Vec<Band>")]
pub struct TickLadder {
    bands: Vec<Band>,
    /// First tick index of each band, plus the total tick count at the end.
    offsets: Vec<i64>,
}

impl From<TickLadder> for Vec<Band> {
    fn from(ladder: TickLadder) -> Vec<Band> {
        ladder.bands
    }
}

impl TryFrom<Vec<Band>> for TickLadder {
    type Error = LadderError;
    fn try_from(bands: Vec<Band>) -> Result<TickLadder, LadderError> {
        TickLadder::new(bands)
    }
}

impl TickLadder {
    /// Builds a ladder from contiguous, strictly increasing bands.
    ///
    /// Each band spans `(previous.high, high]` with its own step; the first
    /// band starts at its `low`. The span of every band must be an integer
    /// multiple of its step.
    pub fn new(bands: Vec<Band>) -> Result<TickLadder, LadderError> {
        if bands.is_empty() {
            return Err(LadderError::BadBands("no bands".into()));
        }
        for (i, b) in bands.iter().enumerate() {
            if b.step.0 <= 0 || b.high.0 <= b.low.0 {
                return Err(LadderError::BadBands(format!("degenerate band {i}")));
            }
            if (b.high.0 - b.low.0) % b.step.0 != 0 {
                return Err(LadderError::BadBands(format!(
                    "band {i} span is not a multiple of its step"
                )));
            }
            if i > 0 && bands[i - 1].high != b.low {
                return Err(LadderError::BadBands(format!(
                    "band {i} does not continue from band {}",
                    i - 1
                )));
            }
        }
        let mut ladder = TickLadder { bands, offsets: Vec::new() };
        ladder.rebuild_offsets();
        Ok(ladder)
    }

    fn rebuild_offsets(&mut self) {
        self.offsets.clear();
        let mut tick = 0i64;
        for (i, b) in self.bands.iter().enumerate() {
            self.offsets.push(tick);
            let steps = (b.high.0 - b.low.0) / b.step.0;
            // The first band contributes its low price as tick 0; later
            // bands share their low with the previous band's high.
            tick += if i == 0 { steps + 1 } else { steps };
        }
        self.offsets.push(tick);
    }

    /// The standard public exchange ladder:
    /// 1.01–2 by 0.01, 2–3 by 0.02, 3–4 by 0.05, 4–6 by 0.1, 6–10 by 0.2,
    /// 10–20 by 0.5, 20–30 by 1, 30–50 by 2, 50–100 by 5, 100–1000 by 10.
    pub fn betfair() -> TickLadder {
        let band = |low: i64, high: i64, step: i64| Band {
            low: Price(low),
            high: Price(high),
            step: Price(step),
        };
        TickLadder::new(vec![
            band(101, 200, 1),
            band(200, 300, 2),
            band(300, 400, 5),
            band(400, 600, 10),
            band(600, 1000, 20),
            band(1000, 2000, 50),
            band(2000, 3000, 100),
            band(3000, 5000, 200),
            band(5000, 10000, 500),
            band(10000, 100000, 1000),
        ])
        .expect("builtin band table is valid")
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn min_price(&self) -> Price {
        self.bands[0].low
    }

    pub fn max_price(&self) -> Price {
        self.bands[self.bands.len() - 1].high
    }

    /// Total number of representable prices.
    pub fn len(&self) -> usize {
        self.offsets[self.offsets.len() - 1] as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Maps an on-ladder price to its tick index.
    pub fn tick_index(&self, price: Price) -> Result<Tick, LadderError> {
        for (i, b) in self.bands.iter().enumerate() {
            let first = if i == 0 { b.low.0 } else { b.low.0 + b.step.0 };
            if price.0 >= first && price.0 <= b.high.0 {
                if (price.0 - b.low.0) % b.step.0 != 0 {
                    return Err(LadderError::OffLadderPrice(price));
                }
                let within = (price.0 - first) / b.step.0;
                return Ok(Tick(self.offsets[i] + within));
            }
        }
        Err(LadderError::OffLadderPrice(price))
    }

    /// Maps a tick index back to its price. Inverse of [`tick_index`].
    ///
    /// [`tick_index`]: TickLadder::tick_index
    pub fn price_at(&self, tick: Tick) -> Result<Price, LadderError> {
        let t = tick.0;
        if t < 0 || t >= self.offsets[self.offsets.len() - 1] {
            return Err(LadderError::IndexOutOfRange(t));
        }
        for (i, b) in self.bands.iter().enumerate() {
            if t < self.offsets[i + 1] {
                let first = if i == 0 { b.low.0 } else { b.low.0 + b.step.0 };
                return Ok(Price(first + (t - self.offsets[i]) * b.step.0));
            }
        }
        unreachable!("offset table covers every in-range tick")
    }

    /// Signed tick distance from `from` to `to`.
    pub fn ticks_between(&self, from: Price, to: Price) -> Result<i64, LadderError> {
        Ok(self.tick_index(to)?.0 - self.tick_index(from)?.0)
    }

    /// Price `ticks` steps away from `price` (negative moves down).
    pub fn step_price(&self, price: Price, ticks: i64) -> Result<Price, LadderError> {
        self.price_at(self.tick_index(price)?.offset(ticks))
    }

    pub fn contains_tick(&self, tick: Tick) -> bool {
        tick.0 >= 0 && (tick.0 as usize) < self.len()
    }

    pub fn last_tick(&self) -> Tick {
        Tick(self.offsets[self.offsets.len() - 1] - 1)
    }
}

impl Default for TickLadder {
    fn default() -> Self {
        TickLadder::betfair()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Price {
        Price::parse(text).unwrap()
    }

    #[test]
    fn six_ticks_up_from_4_6_is_5_2() {
        let l = TickLadder::betfair();
        let i = l.tick_index(p("4.6")).unwrap();
        assert_eq!(l.price_at(i.offset(6)).unwrap(), p("5.2"));
    }

    #[test]
    fn four_ticks_between_4_2_and_4_6() {
        let l = TickLadder::betfair();
        assert_eq!(l.ticks_between(p("4.2"), p("4.6")).unwrap(), 4);
        assert_eq!(l.ticks_between(p("4.6"), p("4.2")).unwrap(), -4);
    }

    #[test]
    fn round_trip_identity_at_2_0() {
        let l = TickLadder::betfair();
        assert_eq!(l.price_at(l.tick_index(p("2")).unwrap()).unwrap(), p("2"));
    }

    #[test]
    fn minimum_price_is_tick_zero() {
        let l = TickLadder::betfair();
        assert_eq!(l.tick_index(p("1.01")).unwrap(), Tick(0));
        assert_eq!(l.price_at(Tick(0)).unwrap(), p("1.01"));
    }

    #[test]
    fn one_tick_up_from_4_5_is_4_6() {
        let l = TickLadder::betfair();
        assert_eq!(l.step_price(p("4.5"), 1).unwrap(), p("4.6"));
    }

    #[test]
    fn two_ticks_down_from_4_6_is_4_4() {
        let l = TickLadder::betfair();
        assert_eq!(l.step_price(p("4.6"), -2).unwrap(), p("4.4"));
    }

    #[test]
    fn one_tick_down_from_2_12_is_2_10() {
        let l = TickLadder::betfair();
        assert_eq!(l.step_price(p("2.12"), -1).unwrap(), p("2.1"));
    }

    #[test]
    fn band_crossing_six_ticks_down_from_4_5_is_3_95() {
        // Cross-band arithmetic observed in real trade logs.
        let l = TickLadder::betfair();
        assert_eq!(l.step_price(p("4.5"), -6).unwrap(), p("3.95"));
        assert_eq!(l.step_price(p("4.3"), -6).unwrap(), p("3.85"));
        assert_eq!(l.step_price(p("6"), 1).unwrap(), p("6.2"));
        assert_eq!(l.step_price(p("6"), -6).unwrap(), p("5.4"));
    }

    #[test]
    fn off_ladder_prices_are_rejected() {
        let l = TickLadder::betfair();
        assert!(matches!(l.tick_index(p("4.63")), Err(LadderError::OffLadderPrice(_))));
        assert!(matches!(l.tick_index(p("2.01")), Err(LadderError::OffLadderPrice(_))));
        assert!(matches!(Price::parse("1.005"), Err(LadderError::BadPrice(_))));
    }

    #[test]
    fn out_of_range_tick_is_rejected() {
        let l = TickLadder::betfair();
        assert!(matches!(l.price_at(Tick(-1)), Err(LadderError::IndexOutOfRange(-1))));
        let beyond = Tick(l.len() as i64);
        assert!(l.price_at(beyond).is_err());
    }

    #[test]
    fn round_trip_and_adjacency_over_the_whole_ladder() {
        let l = TickLadder::betfair();
        let mut prev: Option<(Tick, Price)> = None;
        for t in 0..l.len() as i64 {
            let price = l.price_at(Tick(t)).unwrap();
            assert_eq!(l.tick_index(price).unwrap(), Tick(t));
            if let Some((pt, pp)) = prev {
                assert_eq!(t - pt.0, 1);
                assert!(price > pp, "ladder must be strictly increasing");
            }
            prev = Some((Tick(t), price));
        }
        assert_eq!(l.max_price(), Price(100000));
    }
}

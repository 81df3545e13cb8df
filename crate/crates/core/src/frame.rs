//! Market-depth frames.
//!
//! One `Rdf` is a half-second snapshot of a runner's book: unmatched money
//! per price on both sides, cumulative traded volume per price, and the
//! last traded price. A `RunnerBook` is the time-ordered frame sequence of
//! one runner, and a `RaceFrames` groups every runner of a race.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::ladder::{LadderError, Price, Tick, TickLadder};
use crate::money::Money;

/// One market-depth snapshot.
///
/// `bid` holds the unmatched lay-side money (the pink column, best level is
/// the highest tick) and `ask` the unmatched back-side money (the blue
/// column, best level is the lowest tick). `traded` is cumulative matched
/// volume per price.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Rdf {
    pub timestamp_ms: i64,
    pub last_traded: Tick,
    pub bid: BTreeMap<Tick, Money>,
    pub ask: BTreeMap<Tick, Money>,
    pub traded: BTreeMap<Tick, Money>,
}

impl Rdf {
    pub fn best_bid(&self) -> Option<Tick> {
        self.bid.iter().rev().find(|(_, a)| !a.is_zero()).map(|(t, _)| *t)
    }

    pub fn best_ask(&self) -> Option<Tick> {
        self.ask.iter().find(|(_, a)| !a.is_zero()).map(|(t, _)| *t)
    }

    pub fn bid_at(&self, tick: Tick) -> Money {
        self.bid.get(&tick).copied().unwrap_or(Money::ZERO)
    }

    pub fn ask_at(&self, tick: Tick) -> Money {
        self.ask.get(&tick).copied().unwrap_or(Money::ZERO)
    }

    pub fn traded_at(&self, tick: Tick) -> Money {
        self.traded.get(&tick).copied().unwrap_or(Money::ZERO)
    }

    /// Total unmatched money on both sides, an activity measure used by the
    /// category rules.
    pub fn total_unmatched(&self) -> Money {
        self.bid.values().copied().sum::<Money>() + self.ask.values().copied().sum()
    }
}

/// A violation found by [`validate_frame`]. Violations are data, not errors:
/// replayed feeds are checked, reported and then used as-is or skipped by
/// the caller's policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NegativeAmount { side: FrameSide, tick: Tick },
    CrossedBook { best_bid: Tick, best_ask: Tick },
    TradedVolumeDecreased { tick: Tick, before: Money, after: Money },
    NonMonotonicTimestamp { before: i64, after: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameSide {
    Bid,
    Ask,
    Traded,
}

/// Checks a single frame's invariants.
pub fn validate_frame(frame: &Rdf) -> Vec<Violation> {
    let mut out = Vec::new();
    for (side, map) in [
        (FrameSide::Bid, &frame.bid),
        (FrameSide::Ask, &frame.ask),
        (FrameSide::Traded, &frame.traded),
    ] {
        for (&tick, &amount) in map {
            if amount.is_negative() {
                out.push(Violation::NegativeAmount { side, tick });
            }
        }
    }
    if let (Some(bb), Some(ba)) = (frame.best_bid(), frame.best_ask()) {
        if bb >= ba {
            out.push(Violation::CrossedBook { best_bid: bb, best_ask: ba });
        }
    }
    out
}

/// Checks the cross-frame invariants of a consecutive pair.
pub fn validate_frame_pair(prev: &Rdf, next: &Rdf) -> Vec<Violation> {
    let mut out = Vec::new();
    if next.timestamp_ms <= prev.timestamp_ms {
        out.push(Violation::NonMonotonicTimestamp {
            before: prev.timestamp_ms,
            after: next.timestamp_ms,
        });
    }
    for (&tick, &before) in &prev.traded {
        let after = next.traded_at(tick);
        if after < before {
            out.push(Violation::TradedVolumeDecreased { tick, before, after });
        }
    }
    out
}

/// Time-ordered frames of one runner.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunnerBook {
    pub runner_id: String,
    pub frames: Vec<Rdf>,
}

impl RunnerBook {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, f) in self.frames.iter().enumerate() {
            out.extend(validate_frame(f));
            if i > 0 {
                out.extend(validate_frame_pair(&self.frames[i - 1], f));
            }
        }
        out
    }
}

/// All runners of one race plus its identity and scheduled start.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RaceFrames {
    pub race_id: String,
    /// Scheduled start in ms. When the source file carries no header this is
    /// the last frame timestamp of the race.
    pub start_ms: i64,
    pub runners: Vec<RunnerBook>,
}

impl RaceFrames {
    pub fn runner(&self, id: &str) -> Option<&RunnerBook> {
        self.runners.iter().find(|r| r.runner_id == id)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FrameIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Ladder(#[from] LadderError),
}

fn parse_pairs(
    field: &str,
    ladder: &TickLadder,
    line: usize,
) -> Result<BTreeMap<Tick, Money>, FrameIoError> {
    let mut map = BTreeMap::new();
    let field = field.trim();
    if field == "-" || field.is_empty() {
        return Ok(map);
    }
    for pair in field.split(' ') {
        let (price_text, amount_text) = pair.split_once(':').ok_or(FrameIoError::Parse {
            line,
            message: format!("expected price:amount, got {pair:?}"),
        })?;
        let price = Price::parse(price_text).map_err(|e| FrameIoError::Parse {
            line,
            message: e.to_string(),
        })?;
        let tick = ladder.tick_index(price)?;
        let amount = Money::parse(amount_text).map_err(|e| FrameIoError::Parse {
            line,
            message: e.to_string(),
        })?;
        map.insert(tick, amount);
    }
    Ok(map)
}

fn write_pairs(out: &mut String, ladder: &TickLadder, map: &BTreeMap<Tick, Money>) {
    if map.is_empty() {
        out.push('-');
        return;
    }
    let mut first = true;
    for (&tick, &amount) in map {
        if !first {
            out.push(' ');
        }
        first = false;
        let price = ladder.price_at(tick).expect("stored tick is on the ladder");
        let _ = write!(out, "{}:{}", price.to_plain_string(), amount.to_plain_string());
    }
}

/// Reads a race frame file.
///
/// Format, one record per line, tab-separated fields in this order:
///
/// ```text
/// #race <raceId> <scheduledStartMs>          (optional header, first line)
/// <timestampMs> <runnerId> <lastTradedPrice> <bid> <ask> <volume>
/// ```
///
/// where `<bid>`, `<ask>` and `<volume>` are space-separated `price:amount`
/// pairs (`-` when empty). Lines are grouped by runner preserving order.
pub fn read_race<R: BufRead>(reader: R, ladder: &TickLadder) -> Result<RaceFrames, FrameIoError> {
    let mut race = RaceFrames::default();
    let mut explicit_start = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#race") {
            let mut parts = rest.split_whitespace();
            race.race_id = parts
                .next()
                .ok_or(FrameIoError::Parse { line: line_no, message: "missing race id".into() })?
                .to_string();
            race.start_ms = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or(FrameIoError::Parse { line: line_no, message: "missing start ms".into() })?;
            explicit_start = true;
            continue;
        }
        let mut fields = line.split('\t');
        let mut next_field = |name: &str| {
            fields.next().ok_or(FrameIoError::Parse {
                line: line_no,
                message: format!("missing field {name}"),
            })
        };
        let timestamp_ms: i64 = next_field("timestamp")?.parse().map_err(|_| {
            FrameIoError::Parse { line: line_no, message: "bad timestamp".into() }
        })?;
        let runner_id = next_field("runnerId")?.to_string();
        let ltp = Price::parse(next_field("lastTradedPrice")?).map_err(|e| {
            FrameIoError::Parse { line: line_no, message: e.to_string() }
        })?;
        let frame = Rdf {
            timestamp_ms,
            last_traded: ladder.tick_index(ltp)?,
            bid: parse_pairs(next_field("bid")?, ladder, line_no)?,
            ask: parse_pairs(next_field("ask")?, ladder, line_no)?,
            traded: parse_pairs(next_field("volume")?, ladder, line_no)?,
        };
        match race.runners.iter_mut().find(|r| r.runner_id == runner_id) {
            Some(book) => book.frames.push(frame),
            None => race.runners.push(RunnerBook { runner_id, frames: vec![frame] }),
        }
    }
    if !explicit_start {
        race.start_ms = race
            .runners
            .iter()
            .flat_map(|r| r.frames.last())
            .map(|f| f.timestamp_ms)
            .max()
            .unwrap_or(0);
    }
    Ok(race)
}

pub fn read_race_file(path: &Path, ladder: &TickLadder) -> Result<RaceFrames, FrameIoError> {
    let file = std::fs::File::open(path)?;
    read_race(std::io::BufReader::new(file), ladder)
}

/// Writes a race in the canonical format. Round-trips losslessly with
/// [`read_race`]: frames are interleaved by timestamp (runner order breaking
/// ties) so replaying the file reproduces the original event order.
pub fn write_race<W: Write>(
    writer: &mut W,
    ladder: &TickLadder,
    race: &RaceFrames,
) -> Result<(), FrameIoError> {
    writeln!(writer, "#race {} {}", race.race_id, race.start_ms)?;
    let mut cursors: Vec<usize> = vec![0; race.runners.len()];
    loop {
        let mut next: Option<(i64, usize)> = None;
        for (r, book) in race.runners.iter().enumerate() {
            if let Some(frame) = book.frames.get(cursors[r]) {
                if next.map_or(true, |(ts, _)| frame.timestamp_ms < ts) {
                    next = Some((frame.timestamp_ms, r));
                }
            }
        }
        let Some((_, r)) = next else { break };
        let book = &race.runners[r];
        let frame = &book.frames[cursors[r]];
        cursors[r] += 1;
        let mut line = String::new();
        let ltp = ladder.price_at(frame.last_traded)?;
        let _ = write!(line, "{}\t{}\t{}\t", frame.timestamp_ms, book.runner_id, ltp);
        write_pairs(&mut line, ladder, &frame.bid);
        line.push('\t');
        write_pairs(&mut line, ladder, &frame.ask);
        line.push('\t');
        write_pairs(&mut line, ladder, &frame.traded);
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn write_race_file(path: &Path, ladder: &TickLadder, race: &RaceFrames) -> Result<(), FrameIoError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_race(&mut file, ladder, race)
}

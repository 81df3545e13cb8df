//! End-to-end flows of the three trading mechanisms over synthetic frame
//! streams, including the swing(1,1) ≡ scalp equivalence over random
//! streams.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use prelive_core::ladder::{Price, Tick, TickLadder};
use prelive_core::mechanisms::{
    Direction, ScalpParams, ScalpSession, Session, SwingParams, SwingSession, TradeState,
    TrailingParams, TrailingSession,
};
use prelive_core::money::Money;
use prelive_core::Rdf;

fn ladder() -> TickLadder {
    TickLadder::betfair()
}

fn tick(price: &str) -> Tick {
    ladder().tick_index(Price::parse(price).unwrap()).unwrap()
}

/// Builds frames with a standard four-level book around the traded price
/// and cumulative traded volume bookkeeping.
struct Stream {
    frames: Vec<Rdf>,
    traded: BTreeMap<Tick, Money>,
    ts: i64,
}

impl Stream {
    fn new() -> Stream {
        Stream { frames: Vec::new(), traded: BTreeMap::new(), ts: 0 }
    }

    /// One frame: `trade` more money prints at `ltp`; bids rest one to four
    /// ticks below, asks one to four above, `depth` at each level.
    fn push(&mut self, ltp: Tick, trade: f64, depth: f64) {
        *self.traded.entry(ltp).or_insert(Money::ZERO) += Money::from_f64(trade);
        let last = ladder().last_tick().0;
        let mut bid = BTreeMap::new();
        let mut ask = BTreeMap::new();
        for d in 1..=4i64 {
            if ltp.0 - d >= 0 {
                bid.insert(Tick(ltp.0 - d), Money::from_f64(depth));
            }
            if ltp.0 + d <= last {
                ask.insert(Tick(ltp.0 + d), Money::from_f64(depth));
            }
        }
        self.ts += 500;
        self.frames.push(Rdf {
            timestamp_ms: self.ts,
            last_traded: ltp,
            bid,
            ask,
            traded: self.traded.clone(),
        });
    }

    fn run<S: Session>(&self, session: &mut S) -> TradeState {
        for frame in &self.frames {
            if session.step(frame).is_terminal() {
                return session.state();
            }
        }
        session.finish()
    }
}

fn scalp_params(entry: &str, amount: f64) -> ScalpParams {
    ScalpParams {
        entry_amount: Money::from_f64(amount),
        entry_tick: tick(entry),
        wait_frames_normal: 10,
        wait_frames_emergency: 5,
        direction: Direction::Down,
    }
}

#[test]
fn scalp_not_open_when_price_already_moved() {
    let mut stream = Stream::new();
    stream.push(tick("4.5"), 0.0, 100.0);
    let mut session = ScalpSession::new(ladder(), scalp_params("4.6", 2.0));
    assert_eq!(stream.run(&mut session), TradeState::NotOpen);
    assert_eq!(session.report().pl, Money::ZERO);
    assert_eq!(session.report().open_matched, Money::ZERO);
}

#[test]
fn scalp_profit_when_price_falls_one_tick() {
    let mut stream = Stream::new();
    let e = tick("4.6");
    stream.push(e, 0.0, 100.0);
    // Open Back queues at 4.6 with an empty displayed queue; 50 prints
    // there fill it.
    stream.push(e, 50.0, 100.0);
    // The close lay rests at 4.5 behind the displayed 100; enough volume
    // walks the queue and fills it.
    stream.push(tick("4.5"), 150.0, 100.0);
    stream.push(tick("4.5"), 150.0, 100.0);
    let mut session = ScalpSession::new(ladder(), scalp_params("4.6", 2.0));
    let state = stream.run(&mut session);
    assert_eq!(state, TradeState::ClosedProfit);
    let report = session.report();
    assert_eq!(report.open_matched, Money::parse("2").unwrap());
    // Greened close: 4.6/4.5 × 2.00 truncated to the penny.
    assert_eq!(report.close_matched, Money::parse("2.04").unwrap());
    assert_eq!(report.pl, Money::parse("0.04").unwrap());
    assert_eq!(report.close_odds, Some(4.5));
}

#[test]
fn scalp_loss_via_emergency_when_price_rises() {
    let mut stream = Stream::new();
    let e = tick("4.6");
    stream.push(e, 0.0, 100.0);
    stream.push(e, 50.0, 100.0); // open fills
    stream.push(tick("4.7"), 10.0, 100.0); // adverse tick: emergency close
    stream.push(tick("4.8"), 10.0, 100.0);
    stream.push(tick("4.8"), 10.0, 100.0);
    let mut session = ScalpSession::new(ladder(), scalp_params("4.6", 2.0));
    let state = stream.run(&mut session);
    assert_eq!(state, TradeState::ClosedLoss);
    let report = session.report();
    assert!(report.pl < Money::ZERO);
    // Penny truncation of the close stake can leave sub-penny dust.
    assert!(report.unclosed_exposure < Money::from_pennies(1));
}

#[test]
fn scalp_null_close_at_entry_when_market_stalls() {
    let mut stream = Stream::new();
    let e = tick("4.6");
    stream.push(e, 0.0, 100.0);
    stream.push(e, 50.0, 100.0); // open fills
    // The market keeps trading at 4.6 without dropping: the profit close
    // at 4.5 never fills, and after the wait the close re-prices to the
    // entry tick and fills there.
    for _ in 0..12 {
        stream.push(e, 30.0, 100.0);
    }
    for _ in 0..4 {
        stream.push(e, 300.0, 100.0);
    }
    let mut session = ScalpSession::new(ladder(), scalp_params("4.6", 2.0));
    let state = stream.run(&mut session);
    assert_eq!(state, TradeState::ClosedNull);
    let report = session.report();
    assert_eq!(report.pl, Money::ZERO);
    assert_eq!(report.close_matched, report.open_matched);
}

#[test]
fn scalp_not_open_when_entry_never_fills() {
    let mut stream = Stream::new();
    let e = tick("4.6");
    // The price sits at 4.6 but nothing ever prints there.
    for _ in 0..15 {
        stream.push(e, 0.0, 100.0);
    }
    let mut session = ScalpSession::new(ladder(), scalp_params("4.6", 2.0));
    assert_eq!(stream.run(&mut session), TradeState::NotOpen);
}

fn swing_params(entry: &str, amount: f64, up: i64, down: i64) -> SwingParams {
    SwingParams {
        entry_amount: Money::from_f64(amount),
        entry_tick: tick(entry),
        wait_frames_normal: 10,
        wait_frames_emergency: 5,
        direction: Direction::Up,
        ticks_up: up,
        ticks_down: down,
        front_line: true,
        wait_frames_open: 8,
    }
}

#[test]
fn swing_reaches_a_three_tick_target() {
    // Lay 3.00 @ 5.0 predicting up with a 3-tick target at 5.3.
    let mut stream = Stream::new();
    let e = tick("5.0");
    stream.push(e, 0.0, 500.0);
    stream.push(e, 50.0, 500.0); // open lay crosses the displayed ask? no: fills by volume
    stream.push(tick("5.1"), 50.0, 500.0);
    stream.push(tick("5.2"), 50.0, 500.0);
    stream.push(tick("5.3"), 900.0, 500.0);
    stream.push(tick("5.3"), 900.0, 500.0);
    let mut session = SwingSession::new(ladder(), swing_params("5.0", 3.0, 3, 3));
    let state = stream.run(&mut session);
    assert_eq!(state, TradeState::ClosedProfit);
    let report = session.report();
    // Close back at 5.3: 5.0/5.3 × 3.00 = 2.830..., truncated 2.83.
    assert_eq!(report.close_matched, Money::parse("2.83").unwrap());
    assert_eq!(report.pl, Money::parse("0.17").unwrap());
    assert_eq!(report.moved_ticks, 3);
}

#[test]
fn swing_without_front_line_times_out_to_not_open() {
    let mut stream = Stream::new();
    // Market trades away from the requested entry and never comes back.
    for _ in 0..20 {
        stream.push(tick("5.2"), 100.0, 100.0);
    }
    let mut params = swing_params("5.0", 3.0, 3, 3);
    params.front_line = false;
    let mut session = SwingSession::new(ladder(), params);
    assert_eq!(stream.run(&mut session), TradeState::NotOpen);
}

#[test]
fn swing_stops_out_at_the_configured_offset() {
    let mut stream = Stream::new();
    let e = tick("5.0");
    stream.push(e, 0.0, 500.0);
    stream.push(e, 50.0, 500.0);
    stream.push(tick("4.9"), 20.0, 500.0); // one adverse tick: inside the band
    let mut session = SwingSession::new(ladder(), swing_params("5.0", 3.0, 3, 2));
    for frame in &stream.frames {
        session.step(frame);
    }
    assert_eq!(session.state(), TradeState::ClosePlaced, "still live inside the band");
    // Second adverse tick hits the stop and the emergency close fills.
    let mut tail = Stream::new();
    tail.traded = stream.traded.clone();
    tail.ts = stream.ts;
    tail.push(tick("4.8"), 20.0, 500.0);
    tail.push(tick("4.8"), 20.0, 500.0);
    let state = tail.run(&mut session);
    assert_eq!(state, TradeState::ClosedLoss);
}

fn trailing_params(entry: &str, stake: f64, offset: i64, direction: Direction) -> TrailingParams {
    TrailingParams {
        stake_size: Money::from_f64(stake),
        entry_tick: tick(entry),
        front_line: true,
        wait_frames_open: 8,
        wait_frames_normal: 40,
        wait_frames_emergency: 5,
        direction,
        offset,
    }
}

#[test]
fn trailing_ratchets_and_closes_two_ticks_in_profit() {
    // Back at 4.6 predicting down, offset 4: the price falls six ticks to
    // 4.0, the trail follows to 4.4, the reversal closes there.
    let mut stream = Stream::new();
    stream.push(tick("4.6"), 0.0, 500.0);
    stream.push(tick("4.6"), 50.0, 500.0); // open fills
    for p in ["4.5", "4.4", "4.3", "4.2", "4.1", "4.0"] {
        stream.push(tick(p), 30.0, 500.0);
    }
    for p in ["4.1", "4.2", "4.3", "4.4"] {
        stream.push(tick(p), 30.0, 500.0);
    }
    stream.push(tick("4.4"), 900.0, 500.0); // close lay fills at 4.4
    stream.push(tick("4.4"), 900.0, 500.0);
    let mut session =
        TrailingSession::new(ladder(), trailing_params("4.6", 3.0, 4, Direction::Down));
    let state = stream.run(&mut session);
    assert_eq!(state, TradeState::ClosedProfit);
    let report = session.report();
    assert_eq!(report.close_odds, Some(4.4));
    // Greened close at 4.4: 4.6/4.4 × 3.00 = 3.136..., truncated 3.13.
    assert_eq!(report.close_matched, Money::parse("3.13").unwrap());
    assert_eq!(report.pl, Money::parse("0.13").unwrap());

    // The trailed close price never worsened (never rose).
    let history = session.plc_history();
    assert!(history.windows(2).all(|w| w[1] <= w[0]), "plc ratchets monotonically");
    assert_eq!(*history.first().unwrap(), tick("5.0"));
    assert_eq!(*history.last().unwrap(), tick("4.4"));
}

#[test]
fn trailing_immediate_reversal_loses_the_offset() {
    let mut stream = Stream::new();
    stream.push(tick("4.6"), 0.0, 500.0);
    stream.push(tick("4.6"), 50.0, 500.0); // open fills
    for p in ["4.7", "4.8", "4.9", "5.0"] {
        stream.push(tick(p), 30.0, 500.0);
    }
    stream.push(tick("5.0"), 900.0, 500.0); // close lay fills at the stop
    stream.push(tick("5.0"), 900.0, 500.0);
    let mut session =
        TrailingSession::new(ladder(), trailing_params("4.6", 3.0, 4, Direction::Down));
    let state = stream.run(&mut session);
    assert_eq!(state, TradeState::ClosedLoss);
    let report = session.report();
    assert_eq!(report.close_odds, Some(5.0));
    // Close lay at 5.0: 4.6/5.0 × 3.00 = 2.76; loss of four ticks.
    assert_eq!(report.close_matched, Money::parse("2.76").unwrap());
    assert_eq!(report.pl, Money::parse("-0.24").unwrap());
    // The ratchet never engaged.
    assert_eq!(session.plc_history(), &[tick("5.0")]);
}

#[test]
fn trailing_close_is_terminal_once_fully_matched() {
    let mut stream = Stream::new();
    stream.push(tick("4.6"), 0.0, 500.0);
    stream.push(tick("4.6"), 50.0, 500.0);
    stream.push(tick("5.0"), 10.0, 500.0);
    // Partial close fill: the lay queued at 5.0 wants 2.76 but only 1.50
    // prints there after placement.
    stream.push(tick("5.0"), 1.5, 500.0);
    let mut session =
        TrailingSession::new(ladder(), trailing_params("4.6", 3.0, 4, Direction::Down));
    for frame in &stream.frames {
        session.step(frame);
    }
    assert_eq!(session.state(), TradeState::ClosePlaced);
    let vars = session.vars();
    assert!(vars.mal < vars.cal, "close only partially matched");
    let mut tail = Stream::new();
    tail.traded = stream.traded.clone();
    tail.ts = stream.ts;
    tail.push(tick("5.0"), 500.0, 500.0);
    let state = tail.run(&mut session);
    assert_eq!(state, TradeState::ClosedLoss);
    let vars = session.vars();
    assert_eq!(vars.mal, vars.cal, "MAL reached CAL");
}

#[test]
fn trailing_mirror_direction_ratchets_upward() {
    // Lay at 4.6 predicting up, offset 2: price rises to 5.0, trail rises
    // to 4.8, reversal closes there in profit.
    let mut stream = Stream::new();
    stream.push(tick("4.6"), 500.0, 800.0); // lay open crosses nothing; fills by volume
    stream.push(tick("4.6"), 800.0, 800.0);
    for p in ["4.7", "4.8", "4.9", "5.0"] {
        stream.push(tick(p), 30.0, 800.0);
    }
    for p in ["4.9", "4.8"] {
        stream.push(tick(p), 30.0, 800.0);
    }
    stream.push(tick("4.8"), 2000.0, 800.0);
    stream.push(tick("4.8"), 2000.0, 800.0);
    let mut session = TrailingSession::new(ladder(), trailing_params("4.6", 3.0, 2, Direction::Up));
    let state = stream.run(&mut session);
    assert_eq!(state, TradeState::ClosedProfit);
    let history = session.plc_history();
    assert!(history.windows(2).all(|w| w[1] >= w[0]), "mirrored ratchet never falls");
    assert_eq!(session.report().moved_ticks, 4);
}

/// A seeded random walk with random prints, staying on a liquid stretch of
/// the ladder.
fn random_stream(rng: &mut StdRng, frames: usize) -> Stream {
    let mut stream = Stream::new();
    let mut t = tick("4.6").0;
    let low = tick("3.0").0;
    let high = tick("8.0").0;
    for _ in 0..frames {
        let step: i64 = rng.gen_range(-2..=2);
        t = (t + step).clamp(low, high);
        let trade: f64 = if rng.gen_bool(0.7) { rng.gen_range(0.0..400.0) } else { 0.0 };
        let depth: f64 = rng.gen_range(10.0..300.0);
        stream.push(Tick(t), trade, depth);
    }
    stream
}

#[test]
fn swing_one_one_equals_scalp_over_random_streams() {
    let mut rng = StdRng::seed_from_u64(20_606);
    for case in 0..1000 {
        let stream = random_stream(&mut rng, 60);
        for direction in [Direction::Down, Direction::Up] {
            let entry = stream.frames[0].last_traded;
            let scalp = ScalpParams {
                entry_amount: Money::from_pounds(3),
                entry_tick: entry,
                wait_frames_normal: 10,
                wait_frames_emergency: 5,
                direction,
            };
            let swing = SwingParams {
                entry_amount: scalp.entry_amount,
                entry_tick: entry,
                wait_frames_normal: scalp.wait_frames_normal,
                wait_frames_emergency: scalp.wait_frames_emergency,
                direction,
                ticks_up: 1,
                ticks_down: 1,
                front_line: true,
                wait_frames_open: 99,
            };
            let mut a = ScalpSession::new(ladder(), scalp);
            let mut b = SwingSession::new(ladder(), swing);
            let sa = stream.run(&mut a);
            let sb = stream.run(&mut b);
            assert_eq!(sa, sb, "case {case} {direction:?}: terminal states differ");
            assert_eq!(
                a.transcript(),
                b.transcript(),
                "case {case} {direction:?}: transcripts differ"
            );
            assert_eq!(a.report().pl, b.report().pl, "case {case} {direction:?}: PL differs");
            assert_eq!(a.report().close_matched, b.report().close_matched);
        }
    }
}

#[test]
fn sessions_terminate_within_the_time_budget() {
    let mut rng = StdRng::seed_from_u64(77);
    for _ in 0..200 {
        let stream = random_stream(&mut rng, 400);
        let entry = stream.frames[0].last_traded;
        let params = SwingParams {
            entry_amount: Money::from_pounds(2),
            entry_tick: entry,
            wait_frames_normal: 12,
            wait_frames_emergency: 6,
            direction: Direction::Down,
            ticks_up: 2,
            ticks_down: 3,
            front_line: true,
            wait_frames_open: 9,
        };
        let mut session = SwingSession::new(ladder(), params);
        let mut steps = 0usize;
        for frame in &stream.frames {
            steps += 1;
            if session.step(frame).is_terminal() {
                break;
            }
        }
        // Open window + profit window + null window + a bounded emergency
        // horizon in an always-liquid book.
        let bound = (12 + 12 + 6 + 30) as usize;
        assert!(
            session.state().is_terminal() && steps <= bound,
            "session took {steps} frames (state {:?})",
            session.state()
        );
    }
}

#[test]
fn sessions_are_deterministic() {
    let mut rng = StdRng::seed_from_u64(4242);
    let stream = random_stream(&mut rng, 120);
    let entry = stream.frames[0].last_traded;
    let params = trailing_params("4.6", 5.0, 3, Direction::Down);
    let params = TrailingParams { entry_tick: entry, front_line: true, ..params };
    let mut a = TrailingSession::new(ladder(), params);
    let mut b = TrailingSession::new(ladder(), params);
    let sa = stream.run(&mut a);
    let sb = stream.run(&mut b);
    assert_eq!(sa, sb);
    assert_eq!(a.transcript(), b.transcript());
    assert_eq!(a.report(), b.report());
    assert_eq!(a.plc_history(), b.plc_history());
}

#[test]
fn bounded_loss_under_emergency_slippage() {
    let mut rng = StdRng::seed_from_u64(909);
    for _ in 0..300 {
        let stream = random_stream(&mut rng, 120);
        let entry = stream.frames[0].last_traded;
        let params = SwingParams {
            entry_amount: Money::from_pounds(4),
            entry_tick: entry,
            wait_frames_normal: 10,
            wait_frames_emergency: 5,
            direction: Direction::Down,
            ticks_up: 3,
            ticks_down: 2,
            front_line: true,
            wait_frames_open: 9,
        };
        let mut session = SwingSession::new(ladder(), params);
        stream.run(&mut session);
        let report = session.report();
        if report.state == TradeState::NotOpen || report.close_matched.is_zero() {
            continue;
        }
        // The close can never be worse than the worst traded price in the
        // stream plus the synthetic book's one-tick spread on each side.
        let worst_traded =
            stream.frames.iter().map(|f| f.last_traded.0).max().unwrap();
        if let Some(close_odds) = report.close_odds {
            let worst_price = ladder().price_at(Tick(worst_traded + 4)).unwrap().to_f64();
            assert!(close_odds <= worst_price + 1e-9, "{close_odds} vs {worst_price}");
        }
    }
}

//! Trading mechanisms: the scalping, swing and trailing-stop state
//! machines, stepped one market frame at a time.
//!
//! A session owns its simulated book, receives the runner's frames in
//! order and walks the trade state machine until a terminal state. The
//! session reports its matched stakes and PL; a profit close is always
//! placed for the hedged (greened) counter-stake so the PL is locked
//! whichever way the race ends.

mod scalp;
mod swing;
mod trailing;

pub use scalp::ScalpSession;
pub use swing::SwingSession;
pub use trailing::{TrailingSession, TrailingVars};

use serde::{Deserialize, Serialize};

use crate::exchange::{round_trip_pl, SimBook, Side};
use crate::features::MoveClass;
use crate::ladder::Tick;
use crate::money::Money;

/// Predicted price direction of the runner in trade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    /// The side that opens a position for this prediction: a rising price
    /// is captured by laying first, a falling one by backing first.
    pub fn open_side(self) -> Side {
        match self {
            Direction::Up => Side::Lay,
            Direction::Down => Side::Back,
        }
    }

    pub fn close_side(self) -> Side {
        self.open_side().opposite()
    }

    /// +1 when a growing tick index is favorable, -1 otherwise.
    pub fn sign(self) -> i64 {
        match self {
            Direction::Up => 1,
            Direction::Down => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MechanismKind {
    Scalp,
    Swing,
    TrailingStop,
}

/// Session lifecycle. `ClosedProfit`, `ClosedNull`, `ClosedLoss` and
/// `NotOpen` are terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TradeState {
    Starting,
    OpenPlaced,
    Open,
    ClosePlaced,
    ClosedProfit,
    ClosedNull,
    ClosedLoss,
    NotOpen,
}

impl TradeState {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            TradeState::ClosedProfit
                | TradeState::ClosedNull
                | TradeState::ClosedLoss
                | TradeState::NotOpen
        )
    }

    /// The trade-log end-state column: every closed outcome collapses to
    /// `CLOSED`, an unopened session to `NOT_OPEN`.
    pub fn end_state(self) -> &'static str {
        match self {
            TradeState::ClosedProfit | TradeState::ClosedNull | TradeState::ClosedLoss => "CLOSED",
            TradeState::NotOpen => "NOT_OPEN",
            _ => "LIVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalpParams {
    pub entry_amount: Money,
    pub entry_tick: Tick,
    pub wait_frames_normal: u32,
    pub wait_frames_emergency: u32,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwingParams {
    pub entry_amount: Money,
    pub entry_tick: Tick,
    pub wait_frames_normal: u32,
    pub wait_frames_emergency: u32,
    pub direction: Direction,
    /// Profit offset in ticks for an upward trade, loss offset downward.
    pub ticks_up: i64,
    /// Loss offset in ticks for an upward trade, profit offset downward.
    pub ticks_down: i64,
    /// Enter immediately at the entry price instead of waiting for the
    /// market to come to it.
    pub front_line: bool,
    pub wait_frames_open: u32,
}

impl SwingParams {
    pub fn ticks_profit(&self) -> i64 {
        match self.direction {
            Direction::Up => self.ticks_up,
            Direction::Down => self.ticks_down,
        }
    }

    pub fn ticks_stop(&self) -> i64 {
        match self.direction {
            Direction::Up => self.ticks_down,
            Direction::Down => self.ticks_up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrailingParams {
    pub stake_size: Money,
    pub entry_tick: Tick,
    pub front_line: bool,
    pub wait_frames_open: u32,
    pub wait_frames_normal: u32,
    pub wait_frames_emergency: u32,
    pub direction: Direction,
    /// Tick distance the close price trails behind the market.
    pub offset: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MechanismError {
    #[error("class statistics produce a degenerate target of zero ticks")]
    DegenerateTarget,
}

/// Picks the mechanism and trade direction for a predicted class: strong
/// movements run a trailing-stop, weak ones a small swing, neutral stays
/// out of the market.
pub fn select_mechanism(class: MoveClass) -> Option<(MechanismKind, Direction)> {
    let direction = if class.is_up() {
        Direction::Up
    } else if class.is_down() {
        Direction::Down
    } else {
        return None;
    };
    let kind = if class.is_strong() { MechanismKind::TrailingStop } else { MechanismKind::Swing };
    Some((kind, direction))
}

/// Target and stop offsets, in ticks, from a class's mean maximum tick
/// variation: the target rounds the mean, the stop takes 80% of the target
/// for swings and 60% for trailing-stops.
pub fn params_from_class(
    mean_max_tick_variation: f64,
    kind: MechanismKind,
) -> Result<(i64, i64), MechanismError> {
    let target = mean_max_tick_variation.abs().round() as i64;
    if target == 0 {
        return Err(MechanismError::DegenerateTarget);
    }
    let stop_fraction = match kind {
        MechanismKind::TrailingStop => 0.6,
        MechanismKind::Scalp | MechanismKind::Swing => 0.8,
    };
    let stop = (stop_fraction * target as f64).round() as i64;
    Ok((target, stop.max(1)))
}

/// Terminal account of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionReport {
    pub state: TradeState,
    pub direction: Direction,
    pub entry_tick: Tick,
    /// Matched stake of the opening bet.
    pub open_matched: Money,
    /// Matched stake across all closing bets.
    pub close_matched: Money,
    /// Volume-weighted average odds of the open fills.
    pub open_odds: Option<f64>,
    /// Volume-weighted average odds of the close fills.
    pub close_odds: Option<f64>,
    /// Stake difference locked in whichever way the race settles.
    pub pl: Money,
    /// Farthest favorable displacement of the traded price from the entry,
    /// in ticks.
    pub moved_ticks: i64,
    /// Open stake that was never closed when the frames ran out.
    pub unclosed_exposure: Money,
}

/// Classifies a finished session by its locked PL.
pub(crate) fn closed_state(pl: Money) -> TradeState {
    if pl > Money::ZERO {
        TradeState::ClosedProfit
    } else if pl < Money::ZERO {
        TradeState::ClosedLoss
    } else {
        TradeState::ClosedNull
    }
}

/// PL of a set of matched open/close stakes under exchange accounting.
pub(crate) fn locked_pl(open_side: Side, open_matched: Money, close_matched: Money) -> Money {
    round_trip_pl(open_side, open_matched, close_matched)
}

/// The close leg of a session: greened counter-stake sizing, placement,
/// re-pricing and hedge accounting against the simulated book.
///
/// A close fill of amount `a` at price `c` covers `a·c/E` of a stake
/// opened at price `E`; every placement targets the still-uncovered
/// fraction. The state machines decide *when* and *where* to close; this
/// type only keeps the stakes straight.
#[derive(Debug, Clone)]
pub(crate) struct CloseEngine {
    pub entry_price: crate::ladder::Price,
    pub close_side: Side,
    pub owner: String,
    /// Matched open stake, fixed when the open phase ends.
    pub opened: Money,
    pub close_bets: Vec<crate::exchange::BetId>,
    pub last_emergency_tick: Option<Tick>,
}

impl CloseEngine {
    pub fn new(entry_price: crate::ladder::Price, close_side: Side, owner: &str) -> CloseEngine {
        CloseEngine {
            entry_price,
            close_side,
            owner: owner.to_string(),
            opened: Money::ZERO,
            close_bets: Vec::new(),
            last_emergency_tick: None,
        }
    }

    pub fn close_matched_total(&self, book: &SimBook) -> Money {
        self.close_bets
            .iter()
            .filter_map(|id| book.bet(*id))
            .map(|b| b.matched_amount())
            .sum()
    }

    pub fn close_fills(&self, book: &SimBook) -> Vec<(crate::ladder::Price, Money)> {
        let ladder = book.ladder();
        self.close_bets
            .iter()
            .filter_map(|id| book.bet(*id))
            .flat_map(|b| b.fills())
            .map(|f| (ladder.price_at(f.tick).expect("fill on ladder"), f.amount))
            .collect()
    }

    /// Open stake the close fills have hedged so far.
    pub fn covered(&self, book: &SimBook) -> Money {
        let mut covered: i128 = 0;
        for (price, amount) in self.close_fills(book) {
            covered += amount.units() as i128 * price.0 as i128 / self.entry_price.0 as i128;
        }
        Money::from_units(covered as i64)
    }

    pub fn remaining(&self, book: &SimBook) -> Money {
        (self.opened - self.covered(book)).max(Money::ZERO)
    }

    /// Flat once less than a penny of open stake is uncovered, or once the
    /// uncovered remainder is too small to form a placeable penny stake at
    /// the current price.
    pub fn is_flat(&self, book: &SimBook, pbn: Tick) -> bool {
        if self.remaining(book) < Money::from_pennies(1) {
            return true;
        }
        match book.ladder().price_at(pbn) {
            Ok(price) => self.close_amount_at(book, price).is_zero(),
            Err(_) => false,
        }
    }

    /// Whole-penny greened counter-stake of the uncovered fraction at a
    /// close price.
    pub fn close_amount_at(&self, book: &SimBook, close_price: crate::ladder::Price) -> Money {
        let units = self.entry_price.0 as i128 * self.remaining(book).units() as i128
            / close_price.0 as i128;
        Money::from_units(units as i64).trunc_to_penny()
    }

    pub fn place_close_at(&mut self, book: &mut SimBook, tick: Tick) {
        let Ok(price) = book.ladder().price_at(tick) else { return };
        let amount = self.close_amount_at(book, price);
        if amount.is_zero() {
            return;
        }
        if let Ok(id) = book.place_bet(&self.owner.clone(), self.close_side, tick, amount) {
            self.close_bets.push(id);
        }
    }

    /// Best-available close of the uncovered remainder, walking the book.
    /// The greened amount is sized at the sweep's limit price so a full
    /// fill there covers the remainder exactly (up to penny truncation).
    pub fn place_emergency(&mut self, book: &mut SimBook, pbn: Tick) {
        let Ok(pbn_price) = book.ladder().price_at(pbn) else { return };
        let probe = self.close_amount_at(book, pbn_price);
        if probe.is_zero() {
            return;
        }
        let mut limit = book.best_available_for(self.close_side, probe).unwrap_or(pbn);
        let mut amount = probe;
        // The limit depends on the amount and vice versa; two passes settle
        // it against any realistic depth.
        for _ in 0..2 {
            let Ok(price) = book.ladder().price_at(limit) else { break };
            amount = self.close_amount_at(book, price);
            if amount.is_zero() {
                return;
            }
            limit = book.best_available_for(self.close_side, amount).unwrap_or(pbn);
        }
        if let Ok(id) = book.place_bet(&self.owner.clone(), self.close_side, limit, amount) {
            self.last_emergency_tick = Some(limit);
            self.close_bets.push(id);
        }
    }

    pub fn cancel_working(&mut self, book: &mut SimBook) {
        for id in self.close_bets.clone() {
            if book.bet(id).map_or(false, |b| !b.is_terminal()) {
                let _ = book.cancel_bet(id);
            }
        }
    }

    /// True while the newest close bet is still live in the market.
    pub fn has_working_close(&self, book: &SimBook) -> bool {
        self.close_bets
            .last()
            .and_then(|id| book.bet(*id))
            .map_or(false, |b| !b.is_terminal())
    }
}

/// A mechanism session that can be driven frame by frame.
pub trait Session {
    /// Feeds the next frame. Returns the state after the step.
    fn step(&mut self, frame: &crate::frame::Rdf) -> TradeState;

    fn state(&self) -> TradeState;

    /// Forces a terminal state when the frame stream ends.
    fn finish(&mut self) -> TradeState;

    /// Terminal report; meaningful once the session is terminal.
    fn report(&self) -> SessionReport;

    /// State observed after every processed frame, for transcript
    /// comparison between mechanisms.
    fn transcript(&self) -> &[TradeState];

    fn book(&self) -> &SimBook;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strong_classes_trail_weak_classes_swing() {
        assert_eq!(
            select_mechanism(MoveClass::StrongUp),
            Some((MechanismKind::TrailingStop, Direction::Up))
        );
        assert_eq!(
            select_mechanism(MoveClass::WeakDown),
            Some((MechanismKind::Swing, Direction::Down))
        );
        assert_eq!(select_mechanism(MoveClass::Neutral), None);
    }

    #[test]
    fn up_predictions_open_with_a_lay() {
        assert_eq!(Direction::Up.open_side(), Side::Lay);
        assert_eq!(Direction::Down.open_side(), Side::Back);
    }

    #[test]
    fn class_parameterization_reproduces_the_published_examples() {
        assert_eq!(params_from_class(6.44794, MechanismKind::TrailingStop), Ok((6, 4)));
        assert_eq!(params_from_class(3.51428, MechanismKind::Swing), Ok((4, 3)));
        assert_eq!(params_from_class(-3.19424, MechanismKind::Swing), Ok((3, 2)));
        assert_eq!(params_from_class(-6.33173, MechanismKind::TrailingStop), Ok((6, 4)));
    }

    #[test]
    fn zero_mean_is_degenerate() {
        assert_eq!(
            params_from_class(0.0, MechanismKind::Swing),
            Err(MechanismError::DegenerateTarget)
        );
    }
}

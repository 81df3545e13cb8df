//! Bet lifecycle.
//!
//! States follow the order state machine: a placed bet is `InProgress`
//! until the venue acknowledges it, then `Unmatched`, `PartiallyMatched`
//! or `Matched`; only the unmatched fraction of a live bet can be
//! cancelled, and `Matched`/`Cancelled` are terminal for their fractions.

use crate::ladder::{Price, Tick, TickLadder};
use crate::money::Money;

use super::settle::{matched_price_average, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BetId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetState {
    InProgress,
    Unmatched,
    PartiallyMatched,
    Matched,
    Cancelled,
}

impl BetState {
    pub fn is_terminal(self) -> bool {
        matches!(self, BetState::Matched | BetState::Cancelled)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fill {
    pub tick: Tick,
    pub amount: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BetError {
    #[error("bet is already terminal")]
    AlreadyTerminal,
    #[error("fill exceeds the open amount")]
    Overfill,
}

/// One Back or Lay order with its fill history and replay-queue bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bet {
    pub id: BetId,
    pub owner: String,
    pub side: Side,
    pub price_tick: Tick,
    pub requested: Money,
    fills: Vec<Fill>,
    cancelled: Money,
    state: BetState,
    /// Money that must trade at `price_tick` before this bet starts to fill
    /// (worst-case queue position, fixed at placement).
    pub queue_ahead: Money,
    /// Cumulative traded volume at `price_tick` when the bet was placed.
    pub traded_baseline: Money,
}

impl Bet {
    pub fn new(
        id: BetId,
        owner: impl Into<String>,
        side: Side,
        price_tick: Tick,
        requested: Money,
    ) -> Bet {
        Bet {
            id,
            owner: owner.into(),
            side,
            price_tick,
            requested,
            fills: Vec::new(),
            cancelled: Money::ZERO,
            state: BetState::InProgress,
            queue_ahead: Money::ZERO,
            traded_baseline: Money::ZERO,
        }
    }

    pub fn state(&self) -> BetState {
        self.state
    }

    pub fn fills(&self) -> &[Fill] {
        &self.fills
    }

    pub fn matched_amount(&self) -> Money {
        self.fills.iter().map(|f| f.amount).sum()
    }

    pub fn cancelled_amount(&self) -> Money {
        self.cancelled
    }

    /// Amount still live in the market.
    pub fn open_amount(&self) -> Money {
        self.requested - self.matched_amount() - self.cancelled
    }

    pub fn is_terminal(&self) -> bool {
        self.state.is_terminal()
    }

    /// Volume-weighted average matched price in decimal odds.
    pub fn average_matched_price(&self, ladder: &TickLadder) -> Option<f64> {
        let pairs: Vec<(Price, Money)> = self
            .fills
            .iter()
            .map(|f| (ladder.price_at(f.tick).expect("fill tick on ladder"), f.amount))
            .collect();
        matched_price_average(&pairs).ok()
    }

    /// Venue acknowledgement: moves `InProgress` to the resting state
    /// implied by any immediate fills.
    pub fn acknowledge(&mut self) {
        if self.state == BetState::InProgress {
            self.refresh_state();
        }
    }

    pub(crate) fn apply_fill(&mut self, fill: Fill) -> Result<(), BetError> {
        if self.state == BetState::Cancelled {
            return Err(BetError::AlreadyTerminal);
        }
        if fill.amount > self.open_amount() {
            return Err(BetError::Overfill);
        }
        if !fill.amount.is_zero() {
            self.fills.push(fill);
        }
        self.refresh_state();
        Ok(())
    }

    /// Cancels the unmatched fraction. The matched fraction is unaffected.
    pub fn cancel(&mut self) -> Result<(), BetError> {
        if self.is_terminal() {
            return Err(BetError::AlreadyTerminal);
        }
        self.cancelled += self.open_amount();
        self.state = if self.matched_amount().is_zero() {
            BetState::Cancelled
        } else {
            BetState::Matched
        };
        Ok(())
    }

    fn refresh_state(&mut self) {
        let matched = self.matched_amount();
        self.state = if matched + self.cancelled == self.requested {
            if matched.is_zero() {
                BetState::Cancelled
            } else {
                BetState::Matched
            }
        } else if matched.is_zero() {
            BetState::Unmatched
        } else {
            BetState::PartiallyMatched
        };
    }

    /// Worst-case replay fill: with `cumulative` volume traded at the bet's
    /// price since placement, the bet starts filling once the money that
    /// was ahead of it has traded, and is fully matched when the variation
    /// reaches the order amount.
    pub fn step_replay_fill(&mut self, cumulative: Money) -> Money {
        if self.is_terminal() {
            return Money::ZERO;
        }
        let past_queue = (cumulative - self.queue_ahead).max(Money::ZERO);
        let target = past_queue.min(self.requested - self.cancelled);
        let delta = target - self.matched_amount();
        if delta > Money::ZERO {
            self.apply_fill(Fill { tick: self.price_tick, amount: delta })
                .expect("replay fill stays within the open amount");
            delta
        } else {
            Money::ZERO
        }
    }
}

/// Net open position of one runner, maintained from matched flows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Position {
    pub runner_id: String,
    pub open_side: Option<Side>,
    pub open_amount: Money,
    pub open_tick: Tick,
    pub realized_pl: Money,
}

impl Position {
    pub fn flat(runner_id: impl Into<String>) -> Position {
        Position {
            runner_id: runner_id.into(),
            open_side: None,
            open_amount: Money::ZERO,
            open_tick: Tick(0),
            realized_pl: Money::ZERO,
        }
    }

    pub fn is_flat(&self) -> bool {
        self.open_amount.is_zero()
    }
}

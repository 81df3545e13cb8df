//! Simulated order book over a replayed frame stream.
//!
//! Displayed liquidity always comes from the data; the agent's own bets
//! live beside it and never consume each other. A crossing order fills
//! immediately against displayed money best-price-first; anything left
//! rests in the price's FIFO queue behind whatever the frame showed there,
//! and fills only as traded volume accumulates at that price (the
//! worst-case queue rule).

use std::collections::BTreeMap;

use crate::frame::Rdf;
use crate::ladder::{Tick, TickLadder};
use crate::money::Money;

use super::bet::{Bet, BetError, BetId, Fill};
use super::settle::Side;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BookError {
    #[error("price tick {0:?} is not on the ladder")]
    OffLadderPrice(Tick),
    #[error("order amount must be positive")]
    NonPositiveAmount,
    #[error("market is suspended")]
    MarketSuspended,
    #[error("unknown bet id {0:?}")]
    UnknownBet(BetId),
    #[error(transparent)]
    Bet(#[from] BetError),
}

/// The agent-facing simulated exchange for one runner.
#[derive(Debug, Clone)]
pub struct SimBook {
    ladder: TickLadder,
    /// Displayed book from the latest frame, minus what this agent's own
    /// crossing orders already consumed within the frame.
    displayed: Rdf,
    suspended: bool,
    bets: BTreeMap<BetId, Bet>,
    next_id: u64,
    /// Per (side, price): where the FIFO queue ends on the cumulative
    /// traded-volume axis. A new resting bet never starts filling before
    /// every earlier own bet at its price would have finished, even if
    /// displayed money ahead of those bets was cancelled meanwhile.
    queue_end: BTreeMap<(Side, Tick), Money>,
}

impl SimBook {
    pub fn new(ladder: TickLadder) -> SimBook {
        SimBook {
            ladder,
            displayed: Rdf::default(),
            suspended: false,
            bets: BTreeMap::new(),
            next_id: 1,
            queue_end: BTreeMap::new(),
        }
    }

    pub fn ladder(&self) -> &TickLadder {
        &self.ladder
    }

    pub fn displayed(&self) -> &Rdf {
        &self.displayed
    }

    pub fn bet(&self, id: BetId) -> Option<&Bet> {
        self.bets.get(&id)
    }

    pub fn bets(&self) -> impl Iterator<Item = &Bet> {
        self.bets.values()
    }

    pub fn suspend(&mut self) {
        self.suspended = true;
    }

    pub fn resume(&mut self) {
        self.suspended = false;
    }

    pub fn is_suspended(&self) -> bool {
        self.suspended
    }

    /// Applies the next frame: refreshes displayed liquidity and steps the
    /// worst-case replay fill of every live bet from the new cumulative
    /// traded volume. Returns the ids of bets that received fills.
    pub fn on_frame(&mut self, frame: &Rdf) -> Vec<BetId> {
        self.displayed = frame.clone();
        let mut filled = Vec::new();
        for (&id, bet) in self.bets.iter_mut() {
            if bet.is_terminal() {
                continue;
            }
            let cumulative =
                (self.displayed.traded_at(bet.price_tick) - bet.traded_baseline).max(Money::ZERO);
            if bet.step_replay_fill(cumulative) > Money::ZERO {
                filled.push(id);
            }
        }
        filled
    }

    /// Sum of this agent's unmatched money resting at a price, used as the
    /// own-bet component of a new bet's queue.
    fn own_resting_at(&self, side: Side, tick: Tick) -> Money {
        self.bets
            .values()
            .filter(|b| b.side == side && b.price_tick == tick && !b.is_terminal())
            .map(|b| b.open_amount())
            .sum()
    }

    /// Places a bet. The crossing fraction fills against displayed money at
    /// the best available prices; the rest is queued at `tick` behind the
    /// amount the frame displays there plus this agent's own earlier bets.
    pub fn place_bet(
        &mut self,
        owner: &str,
        side: Side,
        tick: Tick,
        amount: Money,
    ) -> Result<BetId, BookError> {
        if self.suspended {
            return Err(BookError::MarketSuspended);
        }
        if amount <= Money::ZERO {
            return Err(BookError::NonPositiveAmount);
        }
        if !self.ladder.contains_tick(tick) {
            return Err(BookError::OffLadderPrice(tick));
        }
        let id = BetId(self.next_id);
        self.next_id += 1;
        let mut bet = Bet::new(id, owner, side, tick, amount);

        // Cross the spread: a Back accepts any displayed bid at its price
        // or better (higher), a Lay any displayed ask at its price or
        // better (lower).
        let mut remaining = amount;
        let mut consumed: Vec<(Tick, Money)> = Vec::new();
        match side {
            Side::Back => {
                for (&level, &avail) in self.displayed.bid.iter().rev() {
                    if level < tick || remaining.is_zero() {
                        break;
                    }
                    let take = avail.min(remaining);
                    if take > Money::ZERO {
                        consumed.push((level, take));
                        remaining -= take;
                    }
                }
            }
            Side::Lay => {
                for (&level, &avail) in self.displayed.ask.iter() {
                    if level > tick || remaining.is_zero() {
                        break;
                    }
                    let take = avail.min(remaining);
                    if take > Money::ZERO {
                        consumed.push((level, take));
                        remaining -= take;
                    }
                }
            }
        }
        for &(level, take) in &consumed {
            bet.apply_fill(Fill { tick: level, amount: take }).expect("crossing fill fits");
            let map = match side {
                Side::Back => &mut self.displayed.bid,
                Side::Lay => &mut self.displayed.ask,
            };
            let entry = map.get_mut(&level).expect("consumed level exists");
            *entry -= take;
            if entry.is_zero() {
                map.remove(&level);
            }
        }

        if remaining > Money::ZERO {
            // Residue rests on the opposite display column: a Back residue
            // is an offer to layers (ask side) and vice versa.
            let displayed_queue = match side {
                Side::Back => self.displayed.ask_at(tick),
                Side::Lay => self.displayed.bid_at(tick),
            };
            let volume_now = self.displayed.traded_at(tick);
            // Worst-case threshold on the cumulative-volume axis: behind
            // everything displayed plus the agent's own resting money, and
            // never ahead of the existing queue's end.
            let static_threshold = volume_now + displayed_queue + self.own_resting_at(side, tick);
            let queue_end = self.queue_end.get(&(side, tick)).copied().unwrap_or(Money::ZERO);
            let threshold = static_threshold.max(queue_end);
            bet.queue_ahead = threshold - volume_now;
            bet.traded_baseline = volume_now;
            self.queue_end.insert((side, tick), threshold + remaining);
        }
        bet.acknowledge();
        self.bets.insert(id, bet);
        Ok(id)
    }

    /// Cancels the unmatched fraction of a bet.
    pub fn cancel_bet(&mut self, id: BetId) -> Result<(), BookError> {
        let bet = self.bets.get_mut(&id).ok_or(BookError::UnknownBet(id))?;
        bet.cancel()?;
        Ok(())
    }

    /// Immediate close at the best available displayed prices, walking the
    /// book level by level. Returns the bet id; any amount beyond the
    /// displayed depth rests at the worst level reached (or at `fallback`
    /// when the side shows nothing).
    pub fn place_at_best_available(
        &mut self,
        owner: &str,
        side: Side,
        amount: Money,
        fallback: Tick,
    ) -> Result<BetId, BookError> {
        let limit = self.sweep_limit(side, amount).unwrap_or(fallback);
        self.place_bet(owner, side, limit, amount)
    }

    /// The worst price a sweep of `amount` has to accept given displayed
    /// depth, or `None` when the opposing side displays nothing.
    pub fn best_available_for(&self, side: Side, amount: Money) -> Option<Tick> {
        self.sweep_limit(side, amount)
    }

    fn sweep_limit(&self, side: Side, amount: Money) -> Option<Tick> {
        let mut remaining = amount;
        let mut worst = None;
        let levels: Vec<(Tick, Money)> = match side {
            Side::Back => self.displayed.bid.iter().rev().map(|(&t, &a)| (t, a)).collect(),
            Side::Lay => self.displayed.ask.iter().map(|(&t, &a)| (t, a)).collect(),
        };
        for (level, avail) in levels {
            if avail.is_zero() {
                continue;
            }
            worst = Some(level);
            if avail >= remaining {
                return worst;
            }
            remaining -= avail;
        }
        worst
    }

    /// Matched money per side, the inputs to position accounting.
    pub fn matched_by_side(&self, owner: &str) -> (Money, Money) {
        let mut back = Money::ZERO;
        let mut lay = Money::ZERO;
        for bet in self.bets.values().filter(|b| b.owner == owner) {
            match bet.side {
                Side::Back => back += bet.matched_amount(),
                Side::Lay => lay += bet.matched_amount(),
            }
        }
        (back, lay)
    }
}

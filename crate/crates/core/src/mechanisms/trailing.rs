//! The trailing-stop state machine.
//!
//! After the position opens, the close price trails the market by a fixed
//! tick offset and ratchets only when the price moves in the predicted
//! direction. When the price reverses to the trailed close price the
//! greened close bet is placed there; a normal-window timeout instead
//! closes at the best available price. For a Back⇒Lay trail the close
//! price never rises once set; the mirror holds for Lay⇒Back.

use crate::exchange::{BetId, SimBook, Side};
use crate::frame::Rdf;
use crate::ladder::{Tick, TickLadder};
use crate::money::Money;

use super::{
    closed_state, locked_pl, CloseEngine, Session, SessionReport, TradeState, TrailingParams,
};

/// The live bookkeeping of a trailing session: the requested entry price,
/// the current market price, the trailed close price and the close-bet
/// fill state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrailingVars {
    /// Requested entry tick.
    pub pbr: Tick,
    /// Current market (last traded) tick.
    pub pbn: Tick,
    /// Trailed close tick.
    pub plc: Option<Tick>,
    /// Matched amount of the close bet.
    pub mal: Money,
    /// Requested amount of the close bet.
    pub cal: Money,
}

#[derive(Debug)]
pub struct TrailingSession {
    params: TrailingParams,
    book: SimBook,
    state: TradeState,
    transcript: Vec<TradeState>,
    open_bet: Option<BetId>,
    close: CloseEngine,
    frames_since_open: u32,
    frames_in_close: u32,
    emergency: bool,
    plc: Option<Tick>,
    plc_history: Vec<Tick>,
    prev_pbn: Option<Tick>,
    pbn: Tick,
    best_favorable: Option<i64>,
}

impl TrailingSession {
    pub fn new(ladder: TickLadder, params: TrailingParams) -> TrailingSession {
        let entry_price = ladder.price_at(params.entry_tick).expect("entry tick on ladder");
        let close = CloseEngine::new(entry_price, params.direction.close_side(), "trailing");
        TrailingSession {
            params,
            book: SimBook::new(ladder),
            state: TradeState::Starting,
            transcript: Vec::new(),
            open_bet: None,
            close,
            frames_since_open: 0,
            frames_in_close: 0,
            emergency: false,
            plc: None,
            plc_history: Vec::new(),
            prev_pbn: None,
            pbn: params.entry_tick,
            best_favorable: None,
        }
    }

    fn sign(&self) -> i64 {
        self.params.direction.sign()
    }

    fn open_side(&self) -> Side {
        self.params.direction.open_side()
    }

    fn displacement(&self, pbn: Tick) -> i64 {
        self.sign() * (pbn.0 - self.params.entry_tick.0)
    }

    fn open_timeout(&self) -> u32 {
        if self.params.front_line {
            self.params.wait_frames_normal
        } else {
            self.params.wait_frames_open
        }
    }

    fn open_matched(&self) -> Money {
        self.open_bet
            .and_then(|id| self.book.bet(id))
            .map(|b| b.matched_amount())
            .unwrap_or(Money::ZERO)
    }

    /// Close tick trailed `offset` ticks behind a market tick, clamped to
    /// the ladder.
    fn trailed_from(&self, pbn: Tick) -> Tick {
        let raw = pbn.0 - self.sign() * self.params.offset;
        Tick(raw.clamp(0, self.book.ladder().last_tick().0))
    }

    /// Ratchets the trailed close price when the market improved.
    fn update_plc(&mut self, pbn: Tick) {
        let candidate = self.trailed_from(pbn);
        let plc = match self.plc {
            None => candidate,
            Some(current) => {
                // Never worsen: a Back⇒Lay trail only moves down, a
                // Lay⇒Back trail only moves up.
                if self.sign() * candidate.0 > self.sign() * current.0 {
                    candidate
                } else {
                    current
                }
            }
        };
        if self.plc != Some(plc) {
            self.plc = Some(plc);
            self.plc_history.push(plc);
        }
    }

    fn enter_emergency(&mut self, pbn: Tick) {
        self.close.cancel_working(&mut self.book);
        self.close.place_emergency(&mut self.book, pbn);
        self.emergency = true;
        self.frames_in_close = 0;
        self.state = TradeState::ClosePlaced;
    }

    fn settle_if_flat(&mut self, pbn: Tick) -> bool {
        if self.state == TradeState::ClosePlaced && self.close.is_flat(&self.book, pbn) {
            self.state = closed_state(self.current_pl());
            return true;
        }
        false
    }

    fn current_pl(&self) -> Money {
        locked_pl(self.open_side(), self.close.opened, self.close.close_matched_total(&self.book))
    }

    pub fn vars(&self) -> TrailingVars {
        let (mal, cal) = self
            .close
            .close_bets
            .last()
            .and_then(|id| self.book.bet(*id))
            .map(|b| (b.matched_amount(), b.requested))
            .unwrap_or((Money::ZERO, Money::ZERO));
        TrailingVars { pbr: self.params.entry_tick, pbn: self.pbn, plc: self.plc, mal, cal }
    }

    /// Every value the trailed close price took, in order.
    pub fn plc_history(&self) -> &[Tick] {
        &self.plc_history
    }
}

impl Session for TrailingSession {
    fn step(&mut self, frame: &Rdf) -> TradeState {
        if self.state.is_terminal() {
            return self.state;
        }
        self.book.on_frame(frame);
        let pbn = frame.last_traded;
        self.pbn = pbn;
        if self.open_bet.is_some() {
            let d = self.displacement(pbn);
            self.best_favorable = Some(self.best_favorable.map_or(d, |b| b.max(d)));
        }

        match self.state {
            TradeState::Starting => {
                if self.params.front_line && pbn != self.params.entry_tick {
                    self.state = TradeState::NotOpen;
                } else if let Ok(id) = self.book.place_bet(
                    "trailing",
                    self.open_side(),
                    self.params.entry_tick,
                    self.params.stake_size,
                ) {
                    self.open_bet = Some(id);
                    self.state = TradeState::OpenPlaced;
                    self.frames_since_open = 0;
                    self.best_favorable = Some(self.displacement(pbn));
                }
            }
            TradeState::OpenPlaced => {
                self.frames_since_open += 1;
                let id = self.open_bet.expect("open bet placed");
                let bet = self.book.bet(id).expect("open bet exists");
                let matched = bet.matched_amount();
                let fully = bet.open_amount().is_zero();
                if fully || self.frames_since_open >= self.open_timeout() {
                    if !fully {
                        let _ = self.book.cancel_bet(id);
                    }
                    if matched.is_zero() {
                        self.state = TradeState::NotOpen;
                    } else {
                        self.close.opened = matched;
                        self.state = TradeState::Open;
                        self.frames_since_open = 0;
                        // The trail starts one offset behind the market.
                        self.update_plc(pbn);
                        self.prev_pbn = Some(pbn);
                    }
                }
            }
            TradeState::Open => {
                self.frames_since_open += 1;
                let moved_favorably =
                    self.prev_pbn.map_or(false, |prev| self.sign() * (pbn.0 - prev.0) > 0);
                if moved_favorably {
                    self.update_plc(pbn);
                }
                self.prev_pbn = Some(pbn);
                let plc = self.plc.expect("plc set when the position opened");
                if self.frames_since_open >= self.params.wait_frames_normal {
                    // Exposure cap: close at the best available offer.
                    self.enter_emergency(pbn);
                } else if self.sign() * (pbn.0 - plc.0) <= 0 {
                    // The reversal reached the trailed price.
                    self.close.place_close_at(&mut self.book, plc);
                    self.state = TradeState::ClosePlaced;
                    self.frames_in_close = 0;
                }
            }
            TradeState::ClosePlaced => {
                self.frames_in_close += 1;
                if self.settle_if_flat(pbn) {
                    // Fully matched: MAL reached CAL.
                } else if self.emergency {
                    if !self.close.has_working_close(&self.book)
                        || self.close.last_emergency_tick != Some(pbn)
                    {
                        self.enter_emergency(pbn);
                    }
                } else if self.frames_in_close >= self.params.wait_frames_emergency {
                    self.enter_emergency(pbn);
                }
            }
            _ => {}
        }
        self.settle_if_flat(pbn);

        self.transcript.push(self.state);
        self.state
    }

    fn state(&self) -> TradeState {
        self.state
    }

    fn finish(&mut self) -> TradeState {
        if self.state.is_terminal() {
            return self.state;
        }
        if let Some(id) = self.open_bet {
            if self.book.bet(id).map_or(false, |b| !b.is_terminal()) {
                let _ = self.book.cancel_bet(id);
            }
        }
        self.close.cancel_working(&mut self.book);
        if self.close.opened.is_zero() {
            self.close.opened = self.open_matched();
        }
        self.state = if self.close.opened.is_zero() {
            TradeState::NotOpen
        } else {
            closed_state(self.current_pl())
        };
        self.transcript.push(self.state);
        self.state
    }

    fn report(&self) -> SessionReport {
        let ladder = self.book.ladder();
        let open_bet = self.open_bet.and_then(|id| self.book.bet(id));
        SessionReport {
            state: self.state,
            direction: self.params.direction,
            entry_tick: self.params.entry_tick,
            open_matched: self.open_matched(),
            close_matched: self.close.close_matched_total(&self.book),
            open_odds: open_bet.and_then(|b| b.average_matched_price(ladder)),
            close_odds: crate::exchange::matched_price_average(&self.close.close_fills(&self.book))
                .ok(),
            pl: self.current_pl(),
            moved_ticks: self.best_favorable.unwrap_or(0),
            unclosed_exposure: if self.open_matched().is_zero() {
                Money::ZERO
            } else {
                self.close.remaining(&self.book)
            },
        }
    }

    fn transcript(&self) -> &[TradeState] {
        &self.transcript
    }

    fn book(&self) -> &SimBook {
        &self.book
    }
}

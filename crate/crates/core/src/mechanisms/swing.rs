//! The swing state machine: a scalp generalized to asymmetric profit and
//! loss offsets.
//!
//! The profit close rests the configured number of ticks in the predicted
//! direction; the position bails out at the best available price once the
//! market moves the stop offset against it. Within the band nothing
//! happens. With `front_line` unset the entry bet may rest up to
//! `wait_frames_open` frames waiting for the market to come to it.

use crate::exchange::{BetId, SimBook, Side};
use crate::frame::Rdf;
use crate::ladder::{Tick, TickLadder};
use crate::money::Money;

use super::{closed_state, locked_pl, CloseEngine, Session, SessionReport, SwingParams, TradeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ClosePhase {
    Profit,
    Null,
    Emergency,
}

#[derive(Debug)]
pub struct SwingSession {
    params: SwingParams,
    book: SimBook,
    state: TradeState,
    transcript: Vec<TradeState>,
    open_bet: Option<BetId>,
    close: CloseEngine,
    phase: ClosePhase,
    frames_in_phase: u32,
    best_favorable: Option<i64>,
}

impl SwingSession {
    pub fn new(ladder: TickLadder, params: SwingParams) -> SwingSession {
        let entry_price = ladder.price_at(params.entry_tick).expect("entry tick on ladder");
        let close = CloseEngine::new(entry_price, params.direction.close_side(), "swing");
        SwingSession {
            params,
            book: SimBook::new(ladder),
            state: TradeState::Starting,
            transcript: Vec::new(),
            open_bet: None,
            close,
            phase: ClosePhase::Profit,
            frames_in_phase: 0,
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

    /// Frames the entry bet may rest before the trade is called off: the
    /// open window when waiting for the market, the normal window when
    /// entering at the front line.
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

    fn enter_emergency(&mut self, pbn: Tick) {
        self.close.cancel_working(&mut self.book);
        self.close.place_emergency(&mut self.book, pbn);
        self.phase = ClosePhase::Emergency;
        self.frames_in_phase = 0;
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
}

impl Session for SwingSession {
    fn step(&mut self, frame: &Rdf) -> TradeState {
        if self.state.is_terminal() {
            return self.state;
        }
        self.book.on_frame(frame);
        let pbn = frame.last_traded;
        if self.open_bet.is_some() {
            let d = self.displacement(pbn);
            self.best_favorable = Some(self.best_favorable.map_or(d, |b| b.max(d)));
        }

        match self.state {
            TradeState::Starting => {
                if self.params.front_line && pbn != self.params.entry_tick {
                    self.state = TradeState::NotOpen;
                } else if let Ok(id) = self.book.place_bet(
                    "swing",
                    self.open_side(),
                    self.params.entry_tick,
                    self.params.entry_amount,
                ) {
                    self.open_bet = Some(id);
                    self.state = TradeState::OpenPlaced;
                    self.frames_in_phase = 0;
                    self.best_favorable = Some(self.displacement(pbn));
                }
            }
            TradeState::OpenPlaced => {
                self.frames_in_phase += 1;
                let id = self.open_bet.expect("open bet placed");
                let bet = self.book.bet(id).expect("open bet exists");
                let matched = bet.matched_amount();
                let fully = bet.open_amount().is_zero();
                if fully || self.frames_in_phase >= self.open_timeout() {
                    if !fully {
                        let _ = self.book.cancel_bet(id);
                    }
                    if matched.is_zero() {
                        self.state = TradeState::NotOpen;
                    } else {
                        self.close.opened = matched;
                        let target = self.params.entry_tick.offset(
                            self.sign() * self.params.ticks_profit(),
                        );
                        self.state = TradeState::ClosePlaced;
                        self.phase = ClosePhase::Profit;
                        self.frames_in_phase = 0;
                        self.close.place_close_at(&mut self.book, target);
                    }
                }
            }
            TradeState::ClosePlaced => {
                self.frames_in_phase += 1;
                if self.settle_if_flat(pbn) {
                    // Close filled on this frame's volume.
                } else if self.phase != ClosePhase::Emergency
                    && self.displacement(pbn) <= -self.params.ticks_stop()
                {
                    self.enter_emergency(pbn);
                } else {
                    match self.phase {
                        ClosePhase::Profit => {
                            if self.frames_in_phase >= self.params.wait_frames_normal {
                                self.close.cancel_working(&mut self.book);
                                self.phase = ClosePhase::Null;
                                self.frames_in_phase = 0;
                                let entry = self.params.entry_tick;
                                self.close.place_close_at(&mut self.book, entry);
                            }
                        }
                        ClosePhase::Null => {
                            if self.frames_in_phase >= self.params.wait_frames_emergency {
                                self.enter_emergency(pbn);
                            }
                        }
                        ClosePhase::Emergency => {
                            if !self.close.has_working_close(&self.book)
                                || self.close.last_emergency_tick != Some(pbn)
                            {
                                self.enter_emergency(pbn);
                            }
                        }
                    }
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

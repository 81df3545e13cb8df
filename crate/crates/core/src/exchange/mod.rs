//! Simulated exchange: settlement math, bet lifecycle and the replayed
//! order book.

mod bet;
mod book;
mod settle;

pub use bet::{Bet, BetError, BetId, BetState, Fill, Position};
pub use book::{BookError, SimBook};
pub use settle::{
    close_amount_back, close_amount_back_pennies, close_amount_lay, close_amount_lay_pennies,
    liability_lay, matched_price_average, outcome_pl, profit_back, round_trip_pl,
    trade_pl_branches, SettleError, Side,
};

//! Back/Lay settlement and hedging arithmetic.
//!
//! Stakes are fixed-point money and prices exact hundredths, so every value
//! here is computed in integer arithmetic where exactness matters. The
//! close-amount formulas return the exact real solution; the penny variants
//! truncate toward zero, which is what an order placement does.

use crate::ladder::Price;
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SettleError {
    #[error("cannot average an empty fill list")]
    EmptyFills,
    #[error("fill amounts must be positive")]
    NonPositiveFill,
}

/// Which way a bet sits.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
pub enum Side {
    /// Money on the runner winning; profit `stake × (price − 1)`,
    /// liability the stake itself.
    Back,
    /// Money against the runner; profit the stake itself, liability
    /// `stake × (price − 1)`.
    Lay,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Back => Side::Lay,
            Side::Lay => Side::Back,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Back => "Back",
            Side::Lay => "Lay",
        })
    }
}

/// Volume-weighted average price of a set of fills.
pub fn matched_price_average(fills: &[(Price, Money)]) -> Result<f64, SettleError> {
    if fills.is_empty() {
        return Err(SettleError::EmptyFills);
    }
    let mut num: i128 = 0;
    let mut den: i128 = 0;
    for &(price, amount) in fills {
        if amount.units() <= 0 {
            return Err(SettleError::NonPositiveFill);
        }
        num += price.0 as i128 * amount.units() as i128;
        den += amount.units() as i128;
    }
    Ok(num as f64 / den as f64 / 100.0)
}

fn times_price_minus_one(amount: Money, price: Price) -> Money {
    let units = amount.units() as i128 * (price.0 - 100) as i128;
    // Exact when the stake is whole pennies; sub-penny stakes round to the
    // nearest unit.
    let rounded = (units + if units >= 0 { 50 } else { -50 }) / 100;
    Money::from_units(rounded as i64)
}

/// Profit of a matched Back bet if the runner wins.
pub fn profit_back(amount: Money, price: Price) -> Money {
    times_price_minus_one(amount, price)
}

/// Liability of a matched Lay bet if the runner wins.
pub fn liability_lay(amount: Money, price: Price) -> Money {
    times_price_minus_one(amount, price)
}

/// Signed settlement of one matched bet for a known outcome.
pub fn outcome_pl(side: Side, amount: Money, price: Price, runner_wins: bool) -> Money {
    match (side, runner_wins) {
        (Side::Back, true) => profit_back(amount, price),
        (Side::Back, false) => -amount,
        (Side::Lay, true) => -liability_lay(amount, price),
        (Side::Lay, false) => amount,
    }
}

/// Exact Lay stake that levels the outcome of an open Back position when
/// closed at `lay_close_price`.
pub fn close_amount_lay(open_back_price: Price, open_back_amount: Money, lay_close_price: Price) -> f64 {
    open_back_price.0 as f64 / lay_close_price.0 as f64 * open_back_amount.to_f64()
}

/// Exact Back stake that levels the outcome of an open Lay position when
/// closed at `back_close_price`.
pub fn close_amount_back(open_lay_price: Price, open_lay_amount: Money, back_close_price: Price) -> f64 {
    open_lay_price.0 as f64 / back_close_price.0 as f64 * open_lay_amount.to_f64()
}

fn close_amount_pennies(open_price: Price, open_amount: Money, close_price: Price) -> Money {
    let units = open_price.0 as i128 * open_amount.units() as i128 / close_price.0 as i128;
    Money::from_units(units as i64).trunc_to_penny()
}

/// Placeable (whole-penny, truncated) form of [`close_amount_lay`].
pub fn close_amount_lay_pennies(
    open_back_price: Price,
    open_back_amount: Money,
    lay_close_price: Price,
) -> Money {
    close_amount_pennies(open_back_price, open_back_amount, lay_close_price)
}

/// Placeable (whole-penny, truncated) form of [`close_amount_back`].
pub fn close_amount_back_pennies(
    open_lay_price: Price,
    open_lay_amount: Money,
    back_close_price: Price,
) -> Money {
    close_amount_pennies(open_lay_price, open_lay_amount, back_close_price)
}

/// PL of a closed two-leg position under the exchange's own accounting:
/// the runner-loses branch, which after penny rounding of the close stake
/// is the figure a trade log carries.
///
/// `open_side` is the side of the opening bet; `close_amount` the stake of
/// the counter bet.
pub fn round_trip_pl(open_side: Side, open_amount: Money, close_amount: Money) -> Money {
    match open_side {
        // Back open: the lay close wins its stake, the back loses its stake.
        Side::Back => close_amount - open_amount,
        // Lay open: the lay wins its stake, the back close loses its stake.
        Side::Lay => open_amount - close_amount,
    }
}

/// Both settlement branches of a two-leg trade with explicit stakes.
pub fn trade_pl_branches(
    open_side: Side,
    open_amount: Money,
    open_price: Price,
    close_amount: Money,
    close_price: Price,
) -> (Money, Money) {
    let close_side = open_side.opposite();
    let wins = outcome_pl(open_side, open_amount, open_price, true)
        + outcome_pl(close_side, close_amount, close_price, true);
    let loses = outcome_pl(open_side, open_amount, open_price, false)
        + outcome_pl(close_side, close_amount, close_price, false);
    (wins, loses)
}

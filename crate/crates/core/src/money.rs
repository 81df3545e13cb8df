//! Fixed-point money arithmetic.
//!
//! All monetary values are held as integer ten-thousandths of a pound so
//! that stake and profit arithmetic over exchange odds (which are exact
//! hundredths) never touches binary floating point. Display is always in
//! pennies.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Scale factor: internal units per pound.
const UNITS_PER_POUND: i64 = 10_000;
/// Internal units per penny.
const UNITS_PER_PENNY: i64 = 100;

/// A monetary amount in fixed-point ten-thousandths of a pound.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    /// Builds a value from raw ten-thousandths of a pound.
    pub const fn from_units(units: i64) -> Self {
        Money(units)
    }

    pub const fn from_pennies(pennies: i64) -> Self {
        Money(pennies * UNITS_PER_PENNY)
    }

    pub const fn from_pounds(pounds: i64) -> Self {
        Money(pounds * UNITS_PER_POUND)
    }

    /// Raw value in ten-thousandths of a pound.
    pub const fn units(self) -> i64 {
        self.0
    }

    /// Whole pennies, truncated toward zero.
    pub const fn whole_pennies(self) -> i64 {
        self.0 / UNITS_PER_PENNY
    }

    /// Truncates toward zero to a whole number of pennies.
    ///
    /// This is the rounding applied when a computed stake is turned into a
    /// placeable order amount.
    pub const fn trunc_to_penny(self) -> Money {
        Money((self.0 / UNITS_PER_PENNY) * UNITS_PER_PENNY)
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub const fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn min(self, other: Money) -> Money {
        Money(self.0.min(other.0))
    }

    pub fn max(self, other: Money) -> Money {
        Money(self.0.max(other.0))
    }

    pub fn abs(self) -> Money {
        Money(self.0.abs())
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / UNITS_PER_POUND as f64
    }

    /// Nearest fixed-point value to a float amount of pounds.
    pub fn from_f64(pounds: f64) -> Money {
        Money((pounds * UNITS_PER_POUND as f64).round() as i64)
    }

    /// Parses a plain decimal amount such as `"8"`, `"2.65"` or `"-0.28"`.
    pub fn parse(text: &str) -> Result<Money, MoneyParseError> {
        let text = text.trim();
        let (negative, digits) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(MoneyParseError(text.to_string()));
        }
        if frac_part.len() > 4 {
            return Err(MoneyParseError(text.to_string()));
        }
        let mut units: i64 = 0;
        for c in int_part.chars() {
            let d = c.to_digit(10).ok_or_else(|| MoneyParseError(text.to_string()))? as i64;
            units = units
                .checked_mul(10)
                .and_then(|u| u.checked_add(d))
                .ok_or_else(|| MoneyParseError(text.to_string()))?;
        }
        units = units
            .checked_mul(UNITS_PER_POUND)
            .ok_or_else(|| MoneyParseError(text.to_string()))?;
        let mut frac_units: i64 = 0;
        let mut scale = UNITS_PER_POUND;
        for c in frac_part.chars() {
            let d = c.to_digit(10).ok_or_else(|| MoneyParseError(text.to_string()))? as i64;
            scale /= 10;
            frac_units += d * scale;
        }
        let total = units + frac_units;
        Ok(Money(if negative { -total } else { total }))
    }

    /// Canonical lossless text form: minimal decimals, no currency sign.
    pub fn to_plain_string(self) -> String {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.abs();
        let pounds = abs / UNITS_PER_POUND;
        let frac = abs % UNITS_PER_POUND;
        if frac == 0 {
            format!("{sign}{pounds}")
        } else if frac % UNITS_PER_PENNY == 0 {
            format!("{sign}{pounds}.{:02}", frac / UNITS_PER_PENNY)
        } else {
            let mut s = format!("{sign}{pounds}.{frac:04}");
            while s.ends_with('0') {
                s.pop();
            }
            s
        }
    }
}

/// Two-decimal display, e.g. `2.65` or `-0.28`.
impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.abs();
        write!(f, "{sign}{}.{:02}", abs / UNITS_PER_POUND, (abs % UNITS_PER_POUND) / UNITS_PER_PENNY)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid money amount: {0:?}")]
pub struct MoneyParseError(pub String);

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

//! Rule-based market categorization.
//!
//! Four properties (favorite or not, field size, price band, liquidity
//! band) index a market snapshot into one of 2×3×3×3 = 54 leaves. Each
//! leaf trains its own model; the thresholds are configuration, not
//! constants.

use serde::{Deserialize, Serialize};

use crate::ladder::Price;
use crate::money::Money;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Favorite {
    Yes,
    No,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Runners {
    Few,
    Medium,
    Many,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriceBand {
    Low,
    Medium,
    High,
}

impl PriceBand {
    /// Weight-of-money depth for the band: high prices watch 2 levels,
    /// medium 3, low 4.
    pub fn wom_depth(self) -> usize {
        match self {
            PriceBand::High => 2,
            PriceBand::Medium => 3,
            PriceBand::Low => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Liquidity {
    Low,
    Medium,
    High,
}

/// One leaf of the category tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CategoryKey {
    pub favorite: Favorite,
    pub runners: Runners,
    pub price: PriceBand,
    pub liquidity: Liquidity,
}

impl CategoryKey {
    /// Stable leaf index in 0..54.
    pub fn index(self) -> usize {
        let favorite = match self.favorite {
            Favorite::Yes => 0,
            Favorite::No => 1,
        };
        let runners = match self.runners {
            Runners::Few => 0,
            Runners::Medium => 1,
            Runners::Many => 2,
        };
        let price = match self.price {
            PriceBand::Low => 0,
            PriceBand::Medium => 1,
            PriceBand::High => 2,
        };
        let liquidity = match self.liquidity {
            Liquidity::Low => 0,
            Liquidity::Medium => 1,
            Liquidity::High => 2,
        };
        ((favorite * 3 + runners) * 3 + price) * 3 + liquidity
    }

    pub fn from_index(index: usize) -> Option<CategoryKey> {
        if index >= 54 {
            return None;
        }
        let liquidity = [Liquidity::Low, Liquidity::Medium, Liquidity::High][index % 3];
        let price = [PriceBand::Low, PriceBand::Medium, PriceBand::High][(index / 3) % 3];
        let runners = [Runners::Few, Runners::Medium, Runners::Many][(index / 9) % 3];
        let favorite = [Favorite::Yes, Favorite::No][index / 27];
        Some(CategoryKey { favorite, runners, price, liquidity })
    }
}

/// Configurable split points of the category tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryThresholds {
    /// Field sizes up to this are `Few`.
    pub few_runners_max: usize,
    /// Field sizes up to this (and above `few_runners_max`) are `Medium`.
    pub medium_runners_max: usize,
    /// Odds up to this are a low price.
    pub price_low_max: Price,
    /// Odds up to this (and above `price_low_max`) are a medium price.
    pub price_medium_max: Price,
    /// Unmatched money up to this is low liquidity.
    pub liquidity_low_max: Money,
    /// Unmatched money up to this (and above `liquidity_low_max`) is medium.
    pub liquidity_medium_max: Money,
}

impl Default for CategoryThresholds {
    fn default() -> Self {
        CategoryThresholds {
            few_runners_max: 5,
            medium_runners_max: 11,
            price_low_max: Price(300),
            price_medium_max: Price(600),
            liquidity_low_max: Money::from_pounds(2_000),
            liquidity_medium_max: Money::from_pounds(10_000),
        }
    }
}

impl CategoryThresholds {
    /// Categorizes a runner snapshot: whether it is the race favorite, how
    /// many runners compete, its traded price and its unmatched money near
    /// the touch.
    pub fn categorize(
        &self,
        is_favorite: bool,
        runner_count: usize,
        price: Price,
        liquidity: Money,
    ) -> CategoryKey {
        let favorite = if is_favorite { Favorite::Yes } else { Favorite::No };
        let runners = if runner_count <= self.few_runners_max {
            Runners::Few
        } else if runner_count <= self.medium_runners_max {
            Runners::Medium
        } else {
            Runners::Many
        };
        let price = if price <= self.price_low_max {
            PriceBand::Low
        } else if price <= self.price_medium_max {
            PriceBand::Medium
        } else {
            PriceBand::High
        };
        let liquidity = if liquidity <= self.liquidity_low_max {
            Liquidity::Low
        } else if liquidity <= self.liquidity_medium_max {
            Liquidity::Medium
        } else {
            Liquidity::High
        };
        CategoryKey { favorite, runners, price, liquidity }
    }
}

//! Feature engineering: turning raw frame streams into model examples.

mod categorize;
mod dataset;
mod indicators;
mod normalize;

pub use categorize::{CategoryKey, CategoryThresholds, Favorite, Liquidity, PriceBand, Runners};
pub use dataset::{read_dataset, write_dataset, CategoryStats, DatasetRecord};
pub use indicators::{
    build_example, indicator_liquidity_delta, indicator_price_diff_from_start,
    indicator_price_integral, indicator_volume_direction, indicator_wom, max_abs_tick_variation,
    target_integral, Example, LiquiditySide, Segment, EXAMPLE_FRAMES, SEGMENT_FRAMES, TIME_STEPS,
    VARIABLES,
};
pub use normalize::{
    label_by_quintiles, normalize, truncated_minmax, NormalizationSpec, QuintileSplit,
    VariableRange,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("need {expected} frames, got {got}")]
    InsufficientFrames { expected: usize, got: usize },
    #[error("need at least {min} values, got {got}")]
    TooFewValues { min: usize, got: usize },
    #[error("values are all equal; no spread to fit")]
    DegenerateSpread,
    #[error("no class statistics for class {0:?}")]
    MissingClassStats(MoveClass),
    #[error(transparent)]
    Ladder(#[from] crate::ladder::LadderError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// The five price-movement classes of the target integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MoveClass {
    StrongDown,
    WeakDown,
    Neutral,
    WeakUp,
    StrongUp,
}

impl MoveClass {
    pub const ALL: [MoveClass; 5] = [
        MoveClass::StrongDown,
        MoveClass::WeakDown,
        MoveClass::Neutral,
        MoveClass::WeakUp,
        MoveClass::StrongUp,
    ];

    pub fn index(self) -> usize {
        match self {
            MoveClass::StrongDown => 0,
            MoveClass::WeakDown => 1,
            MoveClass::Neutral => 2,
            MoveClass::WeakUp => 3,
            MoveClass::StrongUp => 4,
        }
    }

    pub fn from_index(index: usize) -> Option<MoveClass> {
        MoveClass::ALL.get(index).copied()
    }

    pub fn is_up(self) -> bool {
        matches!(self, MoveClass::WeakUp | MoveClass::StrongUp)
    }

    pub fn is_down(self) -> bool {
        matches!(self, MoveClass::WeakDown | MoveClass::StrongDown)
    }

    pub fn is_strong(self) -> bool {
        matches!(self, MoveClass::StrongDown | MoveClass::StrongUp)
    }
}

impl std::fmt::Display for MoveClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MoveClass::StrongDown => "Strong Down",
            MoveClass::WeakDown => "Weak Down",
            MoveClass::Neutral => "Neutral",
            MoveClass::WeakUp => "Weak Up",
            MoveClass::StrongUp => "Strong Up",
        })
    }
}

//! Betting-exchange market replay and automated-trading toolkit.
//!
//! The crate covers the full pre-live trading pipeline:
//!
//! - [`ladder`]: the banded odds scale and tick arithmetic;
//! - [`frame`]: market-depth snapshots (`Rdf`) and the race frame files;
//! - [`exchange`]: Back/Lay settlement, hedging math and a simulated book
//!   with worst-case replay fills;
//! - [`mechanisms`]: the scalping, swing and trailing-stop trade state
//!   machines;
//! - [`features`]: order-book indicators, normalization and labeling that
//!   turn frame streams into model examples;
//! - [`nnkit`]: a small dense/convolutional/recurrent neural kernel with
//!   attention blocks and analytically checked gradients;
//! - [`harness`]: the production-style simulation loop, trade logs and
//!   evaluation metrics.

pub mod exchange;
pub mod features;
pub mod frame;
pub mod harness;
pub mod ladder;
pub mod mechanisms;
pub mod money;
pub mod nnkit;
pub mod testkit;

pub use exchange::Side;
pub use frame::{RaceFrames, Rdf, RunnerBook};
pub use ladder::{Price, Tick, TickLadder};
pub use money::Money;

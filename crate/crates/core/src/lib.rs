//! Exact analysis of N-person red-and-black games with bet-dependent win
//! probabilities.
//!
//! The crate models the game (fortunes, goal, legal bets, law of motion),
//! checks the functional inequality `f(x) - f(a) >= g(a) f(x - a)` that makes
//! bold play an equilibrium, and certifies or refutes bold-play Nash
//! equilibria by dynamic programming with Monte Carlo cross-checks.

pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod inequality;
pub mod models;
pub mod simulate;
pub mod tables;

pub use error::{Error, Result};

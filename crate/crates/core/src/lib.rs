//! Random iterated function systems with monotone fiber maps, modelled as
//! skew products over a two-sided Markov shift.

pub mod attractor;
pub mod cli;
pub mod error;
pub mod exact;
pub mod fiber;
pub mod measures;
pub mod rng;
pub mod splitting;
pub mod symbolic;
pub mod zoo;

pub use error::{Error, Result};

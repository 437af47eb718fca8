//! Edge video cache placement and trace-driven simulation.
//!
//! - [`demand`]: Zipf popularity, user preference and HD/SD demand tables.
//! - [`placement`]: grouped-knapsack DP placement plus an exhaustive oracle.
//! - [`baselines`]: online LRU, LFU and WGDSF* replacement policies.
//! - [`simulator`]: Poisson request traces and hit/backhaul/delay accounting.
//! - [`scenario`]: scenario files, sweeps, CSV output and figure summaries.

pub mod baselines;
pub mod demand;
pub mod error;
pub mod placement;
pub mod rng;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};

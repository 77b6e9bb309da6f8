//! Truncated Taylor expansion (TTE) surrogates of power-system swing
//! dynamics and the transient stability verdicts they produce.
//!
//! * [`series`]: per-pair truncated expansions of `C sin θ + D cos θ`.
//! * [`smib`]: single-machine-infinite-bus UEP approximations and checks.
//! * [`network`]: case data, power flow, Kron reduction, contingencies.
//! * [`simulator`]: original and TTE right-hand sides, RK4, classification.
//! * [`boundary`]: directional stability-boundary search and campaigns.
//! * [`cct`]: critical clearing times and normalized tables.

pub mod boundary;
pub mod cct;
pub mod error;
pub mod network;
pub mod roots;
pub mod series;
pub mod simulator;
pub mod smib;

pub use error::{Error, Result};

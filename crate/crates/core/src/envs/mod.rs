//! Concrete mixed-system environments.
//!
//! - [`wireless`]: downlink scheduling with Poisson arrivals and per-slot
//!   channel rates.
//! - [`crisscross`]: the two-server criss-cross network, uniformized to
//!   discrete time, in one-phase and two-phase variants.
//! - [`generaljob`]: criss-cross with per-job service requirements drawn
//!   uniformly from `1..=range`.
//! - [`synthetic`]: small fully-tabular environments for oracles and tests.

pub mod crisscross;
pub mod generaljob;
pub mod synthetic;
pub mod wireless;

pub use crisscross::{CrissCross, EventKind};
pub use generaljob::GeneralJobCrissCross;
pub use synthetic::{CostRule, GRule, SyntheticEnv};
pub use wireless::{wireless_g, WirelessDownlink};

//! Two Markovian queues with impatient tenants who renege or jockey.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that is
//! pure computation:
//!
//! * [`config`]: system parameterization, service-rate derivation, patience.
//! * [`markov`]: the closed-form "knowledge" feed (Erlang waits, renege
//!   probabilities, uniformized transient occupancy, jockey hitting times).
//! * [`nn`] and [`actor_critic`]: the "experience" feed, a small two-network
//!   actor-critic trained online against [`env::TenantEnv`].
//! * [`sim`]: the discrete-event engine with pluggable information feeds.
//! * [`asymptotics`]: Monte Carlo checks of the large-backlog limits.
//!
//! File formats, the CLI and parallel sweeps live in the `impatience` crate.

#![no_std]

extern crate alloc;

pub mod actor_critic;
pub mod asymptotics;
pub mod config;
pub mod env;
pub mod estimate;
mod error;
pub mod markov;
pub mod math;
pub mod nn;
pub mod quadrature;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};

//! Deterministic discrete-event simulator for the LMD GHOST + Casper FFG
//! ("Gasper") consensus protocol, with adversary strategies for ex-ante
//! reorgs and the probabilistic-delay balancing attack.
//!
//! The crate is organised bottom-up:
//!
//! * [`gasper`]: block tree, votes, fork choice, FFG bookkeeping, slashing detection.
//! * [`engine`]: event queue, simulated clock, seeded randomness, and the
//!   [`engine::Simulation`] world that drives participants.
//! * [`net`]: delay models, trace ingestion and CDF statistics.
//! * [`validators`]: role assignment, honest behaviour, adversary strategies.
//! * [`experiments`]: run configuration, metrics, sweeps and analytic calculators.

pub mod engine;
pub mod error;
pub mod experiments;
pub mod gasper;
pub mod net;
pub mod params;
pub mod validators;

pub use error::{Error, Result};
pub use params::ProtocolParams;

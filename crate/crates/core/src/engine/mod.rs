//! Simulated clock, event queue, seeded randomness, and the simulation world.

mod aggregates;
mod queue;
mod rng;
mod world;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use queue::{EventKind, EventQueue, Recipient, SimEvent};
pub use rng::SeededRandom;
pub use world::{
    AdversaryCtx, InFlightId, RunTrace, SimConfig, SimOutcome, Simulation, SlotSplit, VoteRecord,
};

/// Milliseconds since genesis.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct SimTime(pub u64);

impl SimTime {
    pub fn plus(self, ms: u64) -> SimTime {
        SimTime(self.0 + ms)
    }

    pub fn saturating_minus(self, ms: u64) -> SimTime {
        SimTime(self.0.saturating_sub(ms))
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

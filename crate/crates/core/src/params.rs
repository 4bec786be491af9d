use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gasper::{Epoch, Slot};

/// Static protocol parameters shared by every participant of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolParams {
    pub n_validators: u32,
    pub committee_size: u32,
    pub slots_per_epoch: u64,
    pub slot_duration_ms: u64,
    /// Adversarial stake fraction.
    pub beta: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            n_validators: 4096,
            committee_size: 128,
            slots_per_epoch: 32,
            slot_duration_ms: 12_000,
            beta: 0.0,
        }
    }
}

impl ProtocolParams {
    /// Params with `n_validators = committee_size * slots_per_epoch`, so every
    /// validator attests exactly once per epoch.
    pub fn full_committees(committee_size: u32, beta: f64) -> Self {
        Self {
            n_validators: committee_size * 32,
            committee_size,
            beta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_validators == 0 {
            return Err(invalid("n_validators", "must be positive"));
        }
        if self.committee_size == 0 {
            return Err(invalid("committee_size", "must be positive"));
        }
        if self.slots_per_epoch == 0 {
            return Err(invalid("slots_per_epoch", "must be positive"));
        }
        if self.slot_duration_ms < 2 || !self.slot_duration_ms.is_multiple_of(2) {
            return Err(invalid("slot_duration_ms", "must be a positive even number of ms"));
        }
        if u64::from(self.committee_size) * self.slots_per_epoch > u64::from(self.n_validators) {
            return Err(invalid(
                "committee_size",
                format!(
                    "{} x {} slots exceeds {} validators",
                    self.committee_size, self.slots_per_epoch, self.n_validators
                ),
            ));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(invalid("beta", format!("{} not in [0, 1)", self.beta)));
        }
        Ok(())
    }

    /// Synchrony bound; a slot lasts two of these.
    pub fn delta_ms(&self) -> u64 {
        self.slot_duration_ms / 2
    }

    /// Votes needed for an FFG supermajority: ⌈2N/3⌉.
    pub fn supermajority(&self) -> usize {
        (2 * self.n_validators as usize).div_ceil(3)
    }

    /// Expected honest committee members, `round((1 - beta) * W)`.
    pub fn w_honest(&self) -> u32 {
        ((1.0 - self.beta) * f64::from(self.committee_size)).round() as u32
    }

    /// Number of adversarial validators, `round(beta * N)`.
    pub fn n_adversarial(&self) -> u32 {
        (self.beta * f64::from(self.n_validators)).round() as u32
    }

    pub fn epoch_of(&self, slot: Slot) -> Epoch {
        Epoch(slot.0 / self.slots_per_epoch)
    }

    pub fn first_slot(&self, epoch: Epoch) -> Slot {
        Slot(epoch.0 * self.slots_per_epoch)
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        field,
        reason: reason.into(),
    }
}

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::gasper::{Epoch, Slot, ValidatorId};
use crate::params::ProtocolParams;

/// Proposers and committees for one epoch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleSchedule {
    pub epoch: Epoch,
    pub first_slot: Slot,
    pub proposers: Vec<ValidatorId>,
    pub committees: Vec<Vec<ValidatorId>>,
    committee_slot: HashMap<ValidatorId, Slot>,
}

impl RoleSchedule {
    fn offset(&self, slot: Slot) -> usize {
        let off = slot.0.checked_sub(self.first_slot.0).expect("slot before epoch") as usize;
        assert!(off < self.proposers.len(), "slot {slot} outside epoch {}", self.epoch);
        off
    }

    pub fn proposer(&self, slot: Slot) -> ValidatorId {
        self.proposers[self.offset(slot)]
    }

    pub fn committee(&self, slot: Slot) -> &[ValidatorId] {
        &self.committees[self.offset(slot)]
    }

    /// The slot whose committee `validator` sits in this epoch, if any.
    pub fn committee_slot(&self, validator: ValidatorId) -> Option<Slot> {
        self.committee_slot.get(&validator).copied()
    }
}

/// Proposers uniform over all validators; committees of size W taken from a
/// uniform permutation, so they are disjoint within the epoch. Proposer and
/// committee draws are independent. With `N > W * slots_per_epoch` the
/// leftover validators do not attest in this epoch.
pub fn assign_roles<R: Rng + ?Sized>(
    params: &ProtocolParams,
    epoch: Epoch,
    rng: &mut R,
) -> RoleSchedule {
    let spe = params.slots_per_epoch as usize;
    let w = params.committee_size as usize;
    let mut perm: Vec<ValidatorId> = (0..params.n_validators).map(ValidatorId).collect();
    perm.shuffle(rng);
    let committees: Vec<Vec<ValidatorId>> = perm.chunks(w).take(spe).map(<[_]>::to_vec).collect();
    let proposers = (0..spe)
        .map(|_| ValidatorId(rng.random_range(0..params.n_validators)))
        .collect();
    let first_slot = params.first_slot(epoch);
    let committee_slot = committees
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |&v| (v, Slot(first_slot.0 + i as u64))))
        .collect();
    RoleSchedule {
        epoch,
        first_slot,
        proposers,
        committees,
        committee_slot,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SeededRandom;

    #[test]
    fn unit_committees_form_a_permutation() {
        let params = ProtocolParams {
            n_validators: 32,
            committee_size: 1,
            ..Default::default()
        };
        let roles = assign_roles(&params, Epoch(0), &mut SeededRandom::new(1));
        let mut all: Vec<u32> = roles.committees.iter().flatten().map(|v| v.0).collect();
        all.sort_unstable();
        assert_eq!(all, (0..32).collect::<Vec<_>>());
        for v in 0..32 {
            assert!(roles.committee_slot(ValidatorId(v)).is_some());
        }
    }

    #[test]
    fn committee_slot_is_uniform() {
        // χ² over 32 bins for validator 0's committee slot across 10^4 epochs.
        let params = ProtocolParams::full_committees(4, 0.0);
        let base = SeededRandom::new(99);
        let mut counts = [0u32; 32];
        let epochs = 10_000u64;
        for e in 0..epochs {
            let roles = assign_roles(&params, Epoch(e), &mut base.fork(1, e));
            let slot = roles.committee_slot(ValidatorId(0)).unwrap();
            counts[(slot.0 - e * 32) as usize] += 1;
        }
        let expected = epochs as f64 / 32.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (f64::from(c) - expected).powi(2) / expected)
            .sum();
        // 31 dof: P(χ² > 61.1) ≈ 0.001.
        assert!(chi2 < 61.1, "chi2 = {chi2}");
    }

    #[test]
    fn consecutive_adversarial_proposers_have_probability_beta_squared() {
        let params = ProtocolParams::full_committees(10, 0.2);
        let adversarial = params.n_adversarial();
        let base = SeededRandom::new(5);
        let epochs = 10_000u64;
        let hits = (0..epochs)
            .filter(|&e| {
                let roles = assign_roles(&params, Epoch(e), &mut base.fork(1, e));
                roles.proposers[0].0 < adversarial && roles.proposers[1].0 < adversarial
            })
            .count();
        let p = hits as f64 / epochs as f64;
        assert!((p - 0.04).abs() <= 0.005, "p = {p}");
    }
}

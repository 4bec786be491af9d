use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adversarial committee votes a refined `k`-reorg needs against `w_honest`
/// honest votes per slot.
pub fn budget_refined(k: u64, w_honest: u64) -> Result<u64> {
    check_k(k)?;
    Ok(w_honest * (k - 1) + 1)
}

/// Adversarial validators a `k`-reorg needs with targeted delivery.
pub fn budget_targeted(k: u64) -> Result<u64> {
    check_k(k)?;
    Ok(2 * k - 1)
}

fn check_k(k: u64) -> Result<()> {
    if k == 0 {
        return Err(Error::config("k", "must be at least 1"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionProbs {
    /// At least one proposal within the horizon.
    pub p_proposer: f64,
    /// At least one committee member in a given slot.
    pub p_committee: f64,
    /// Both, treating the two events as independent.
    pub p_joint: f64,
}

pub fn selection_probs(
    n_adv: u64,
    n_total: u64,
    slots_per_epoch: u64,
    horizon_slots: u64,
) -> Result<SelectionProbs> {
    if n_total == 0 || n_adv > n_total {
        return Err(Error::config("n_adv", format!("{n_adv} not in [0, {n_total}]")));
    }
    if slots_per_epoch == 0 {
        return Err(Error::config("slots_per_epoch", "must be positive"));
    }
    let horizon = i32::try_from(horizon_slots).map_err(|_| Error::config("horizon_slots", "too large"))?;
    let adv = i32::try_from(n_adv).map_err(|_| Error::config("n_adv", "too large"))?;
    let p_proposer = 1.0 - (1.0 - n_adv as f64 / n_total as f64).powi(horizon);
    let p_committee = 1.0 - (1.0 - 1.0 / slots_per_epoch as f64).powi(adv);
    Ok(SelectionProbs {
        p_proposer,
        p_committee,
        p_joint: p_proposer * p_committee,
    })
}

/// Mean number of epochs until both of an epoch's first two proposers are adversarial.
pub fn opportune_wait(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::config("beta", format!("{beta} not in (0, 1)")));
    }
    Ok(1.0 / (beta * beta))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListeningVariant {
    Targeted,
    Probabilistic,
}

/// Seconds a reorging proposer can wait before its block must be final
/// in the honest chain: one slot per reorged block with targeted delivery,
/// two slots regardless of `k` otherwise.
pub fn listening_time_s(k: u64, variant: ListeningVariant) -> Result<u64> {
    check_k(k)?;
    Ok(match variant {
        ListeningVariant::Targeted => 12 * k,
        ListeningVariant::Probabilistic => 24,
    })
}

//! Message propagation delay models, trace ingestion and CDF statistics.

mod cdf;
mod trace;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};

pub use cdf::{cdf_stats, CdfStats, MessageCdf};
pub use trace::{
    load_trace, read_trace, synthetic_trace, write_trace, MessageDelays, SyntheticSender, TraceRecord,
    TraceSet,
};

use crate::error::{Error, Result};

/// Per-recipient propagation delay of one broadcast.
#[derive(Clone, Debug)]
pub enum DelayModel {
    Zero,
    Fixed(u64),
    LogNormal { median_ms: f64, sigma: f64 },
    /// Replays one recorded broadcast of `sender`, drawn uniformly, assigning
    /// its receiver delays to recipients without replacement.
    Empirical { trace: Arc<TraceSet>, sender: u32 },
    /// Explicit per-recipient delays; only available to an adversary with
    /// control over network delay.
    Targeted(BTreeMap<u32, u64>),
}

impl DelayModel {
    /// One delay per entry of `recipients`, in the same order.
    pub fn sample_delays<R: Rng + ?Sized>(&self, recipients: &[u32], rng: &mut R) -> Result<Vec<u64>> {
        match self {
            DelayModel::Zero => Ok(vec![0; recipients.len()]),
            DelayModel::Fixed(d) => Ok(vec![*d; recipients.len()]),
            DelayModel::LogNormal { median_ms, sigma } => {
                let dist = lognormal(*median_ms, *sigma)?;
                Ok(recipients
                    .iter()
                    .map(|_| dist.sample(rng).round().max(0.0) as u64)
                    .collect())
            }
            DelayModel::Empirical { trace, sender } => {
                if recipients.is_empty() {
                    return Ok(Vec::new());
                }
                let msgs = trace.messages_from(*sender).ok_or(Error::UnknownSender(*sender))?;
                let msg = &msgs[rng.random_range(0..msgs.len())];
                if msg.delays.len() < recipients.len() {
                    return Err(Error::InsufficientTraceCoverage {
                        msg_id: msg.msg_id.clone(),
                        available: msg.delays.len(),
                        needed: recipients.len(),
                    });
                }
                let picks = index::sample(rng, msg.delays.len(), recipients.len());
                Ok(picks.iter().map(|i| msg.delays[i]).collect())
            }
            DelayModel::Targeted(schedule) => recipients
                .iter()
                .map(|r| schedule.get(r).copied().ok_or(Error::MissingTarget(*r)))
                .collect(),
        }
    }

    /// Upper bound on any delay this model can produce, when known.
    pub fn max_delay(&self) -> Option<u64> {
        match self {
            DelayModel::Zero => Some(0),
            DelayModel::Fixed(d) => Some(*d),
            DelayModel::Targeted(s) => Some(s.values().copied().max().unwrap_or(0)),
            DelayModel::LogNormal { .. } | DelayModel::Empirical { .. } => None,
        }
    }
}

fn lognormal(median_ms: f64, sigma: f64) -> Result<LogNormal<f64>> {
    if median_ms <= 0.0 || !median_ms.is_finite() {
        return Err(Error::config("delay.median_ms", format!("{median_ms} must be positive")));
    }
    LogNormal::new(median_ms.ln(), sigma)
        .map_err(|e| Error::config("delay.sigma", e.to_string()))
}

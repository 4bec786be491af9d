use super::TraceSet;
use crate::error::{Error, Result};

/// Empirical reception CDF of one broadcast.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageCdf {
    pub msg_id: String,
    pub sorted_delays: Vec<u64>,
}

impl MessageCdf {
    /// Fraction of receivers that have the message by `t` ms.
    pub fn fraction_received(&self, t: u64) -> f64 {
        if self.sorted_delays.is_empty() {
            return 0.0;
        }
        let n = self.sorted_delays.partition_point(|&d| d <= t);
        n as f64 / self.sorted_delays.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdfStats {
    pub sender: u32,
    pub per_message: Vec<MessageCdf>,
    /// `(t, mean fraction received by t)` at every distinct recorded delay.
    pub mean_cdf: Vec<(u64, f64)>,
    /// Least `t` at which the mean CDF reaches one half.
    pub median_ms: u64,
}

impl CdfStats {
    /// Mean over messages of the fraction received by `t`.
    pub fn fraction_received(&self, t: u64) -> f64 {
        let idx = self.mean_cdf.partition_point(|&(x, _)| x <= t);
        if idx == 0 {
            0.0
        } else {
            self.mean_cdf[idx - 1].1
        }
    }
}

pub fn cdf_stats(trace: &TraceSet, sender: u32) -> Result<CdfStats> {
    let msgs = trace
        .messages_from(sender)
        .filter(|m| !m.is_empty())
        .ok_or(Error::UnknownSender(sender))?;
    let per_message: Vec<MessageCdf> = msgs
        .iter()
        .map(|m| {
            let mut sorted_delays = m.delays.clone();
            sorted_delays.sort_unstable();
            MessageCdf {
                msg_id: m.msg_id.clone(),
                sorted_delays,
            }
        })
        .collect();

    let mut points: Vec<u64> = per_message
        .iter()
        .flat_map(|m| m.sorted_delays.iter().copied())
        .collect();
    points.sort_unstable();
    points.dedup();

    // Sweep all messages forward together instead of bisecting per point.
    let mut cursors = vec![0usize; per_message.len()];
    let mut mean_cdf = Vec::with_capacity(points.len());
    for &t in &points {
        let mut total = 0.0;
        for (m, cur) in per_message.iter().zip(cursors.iter_mut()) {
            while *cur < m.sorted_delays.len() && m.sorted_delays[*cur] <= t {
                *cur += 1;
            }
            total += *cur as f64 / m.sorted_delays.len() as f64;
        }
        mean_cdf.push((t, total / per_message.len() as f64));
    }
    let median_ms = mean_cdf
        .iter()
        .find(|&&(_, f)| f >= 0.5 - 1e-12)
        .map(|&(t, _)| t)
        .unwrap_or(0);
    Ok(CdfStats {
        sender,
        per_message,
        mean_cdf,
        median_ms,
    })
}

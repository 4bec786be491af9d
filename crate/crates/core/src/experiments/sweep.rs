use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_once, trial_seed, ExperimentConfig, RunRecord};
use crate::error::{Error, Result};
use crate::net::DelayModel;
use crate::validators::StrategyConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t_delay_ms: u64,
    pub mean_stall_slots: f64,
    pub trials: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub records: Vec<RunRecord>,
}

impl SweepResult {
    /// The delay with the longest mean stall; the smallest such delay on ties.
    pub fn argmax(&self) -> Option<SweepPoint> {
        self.points.iter().copied().fold(None, |best, p| match best {
            Some(b) if b.mean_stall_slots >= p.mean_stall_slots => Some(b),
            _ => Some(p),
        })
    }

    pub fn at(&self, t_delay_ms: u64) -> Option<SweepPoint> {
        self.points.iter().copied().find(|p| p.t_delay_ms == t_delay_ms)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_delay_ms", "mean_stall_slots", "trials"])?;
        for p in &self.points {
            w.write_record([
                p.t_delay_ms.to_string(),
                format!("{:.4}", p.mean_stall_slots),
                p.trials.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<sweep output>", e))?;
        Ok(())
    }
}

/// Balancing attack over a grid of swaying delays, `cfg.trials` runs per
/// point. Trial `i` uses the same seed at every point. Runs are spread over
/// `jobs` threads (all cores when `None`); the result does not depend on it.
pub fn sweep_tdelay(
    cfg: &ExperimentConfig,
    network: &DelayModel,
    points: &[u64],
    jobs: Option<usize>,
) -> Result<SweepResult> {
    let tasks: Vec<(u64, u64)> = points
        .iter()
        .flat_map(|&t| (0..cfg.trials).map(move |i| (t, i)))
        .collect();
    let run = |&(t, i): &(u64, u64)| {
        let strategy = StrategyConfig::Balancing { t_delay_ms: t };
        run_once(cfg, &strategy, network, trial_seed(cfg.seed, i))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    let records: Vec<RunRecord> = pool.install(|| tasks.par_iter().map(run).collect::<Result<_>>())?;

    let per_point = cfg.trials as usize;
    let points = points
        .iter()
        .zip(records.chunks(per_point.max(1)))
        .map(|(&t, runs)| SweepPoint {
            t_delay_ms: t,
            mean_stall_slots: runs.iter().map(|r| r.stall_slots.unwrap_or(0) as f64).sum::<f64>()
                / runs.len() as f64,
            trials: runs.len() as u64,
        })
        .collect();
    Ok(SweepResult { points, records })
}

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::engine::SlotSplit;
use crate::error::{Error, Result};
use crate::gasper::{Checkpoint, Epoch};

/// Metrics of one simulated run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: String,
    pub k: Option<u64>,
    pub t_delay_ms: Option<u64>,
    pub seed: u64,
    /// `None` when the attack never got an opportunity.
    pub success: Option<bool>,
    pub reorg_len: u64,
    /// Slots the balancing attack kept the chain split.
    pub stall_slots: Option<u64>,
    pub adv_votes_spent: u64,
    pub offenses: usize,
    pub finality_delay_epochs: u64,
    pub attack_slot: Option<u64>,
    pub orphaned_honest_blocks: u64,
    pub expired_target_votes: u64,
    pub max_aggregate_backlog: u64,
    pub aggregate_backlog: Vec<u64>,
    pub wait_epochs: u64,
    pub splits: Vec<SlotSplit>,
    pub justified: Vec<(u64, Checkpoint)>,
    pub finalized: Vec<(u64, Checkpoint)>,
    pub epoch_lag: Vec<(Epoch, u64)>,
    pub note: Option<String>,
}

pub const RESULTS_HEADER: [&str; 10] = [
    "strategy",
    "k",
    "t_delay_ms",
    "seed",
    "success",
    "reorg_len",
    "stall_slots",
    "adv_votes_spent",
    "offenses",
    "finality_delay_epochs",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl RunRecord {
    pub fn csv_row(&self) -> [String; 10] {
        [
            self.strategy.clone(),
            opt(self.k),
            opt(self.t_delay_ms),
            self.seed.to_string(),
            opt(self.success),
            self.reorg_len.to_string(),
            opt(self.stall_slots),
            self.adv_votes_spent.to_string(),
            self.offenses.to_string(),
            self.finality_delay_epochs.to_string(),
        ]
    }
}

pub fn write_results(records: &[RunRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush().map_err(|e| Error::io("<results output>", e))?;
    Ok(())
}

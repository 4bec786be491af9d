use std::collections::HashSet;

use rand::RngCore;

use super::{ExperimentConfig, RunRecord};
use crate::engine::{SeededRandom, SimOutcome, Simulation};
use crate::error::Result;
use crate::gasper::detect_slashing;
use crate::net::DelayModel;
use crate::validators::StrategyConfig;

const DOMAIN_TRIALS: u64 = 7;

/// Seed of trial `trial` of an experiment seeded with `base`.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    SeededRandom::new(base).fork(DOMAIN_TRIALS, trial).next_u64()
}

/// Run one simulation and keep the full outcome alongside its metrics.
pub fn run_detailed(
    cfg: &ExperimentConfig,
    strategy: &StrategyConfig,
    network: &DelayModel,
    seed: u64,
    verbose: bool,
) -> Result<(RunRecord, SimOutcome)> {
    let sim_cfg = cfg.sim_config(network.clone(), seed, verbose);
    let outcome = Simulation::new(sim_cfg, strategy.build())?.run()?;
    let record = summarize(cfg, strategy, seed, &outcome);
    Ok((record, outcome))
}

pub fn run_once(
    cfg: &ExperimentConfig,
    strategy: &StrategyConfig,
    network: &DelayModel,
    seed: u64,
) -> Result<RunRecord> {
    run_detailed(cfg, strategy, network, seed, false).map(|(r, _)| r)
}

/// Every trial of `cfg` in order.
pub fn run_trials(cfg: &ExperimentConfig, network: &DelayModel) -> Result<Vec<RunRecord>> {
    (0..cfg.trials)
        .map(|t| run_once(cfg, &cfg.strategy, network, trial_seed(cfg.seed, t)))
        .collect()
}

fn summarize(cfg: &ExperimentConfig, strategy: &StrategyConfig, seed: u64, out: &SimOutcome) -> RunRecord {
    let trace = &out.trace;
    let report = out.report.clone().unwrap_or_default();
    let head = out.final_head(cfg.tiebreak);
    let canonical: HashSet<_> = out.view.ancestors(head).map(|b| b.id).collect();
    let orphaned = out
        .blocks
        .iter()
        .filter(|b| out.public[b.id.0 as usize] && !report.private_blocks.contains(&b.id))
        .filter(|b| !canonical.contains(&b.id))
        .count() as u64;
    let stall_slots = match strategy {
        StrategyConfig::Balancing { .. } if report.attack_slot.is_some() => {
            Some(report.lost_at.map_or(cfg.horizon, |s| s.max(2)))
        }
        _ => None,
    };
    let finality_delay_epochs = trace
        .epoch_lag
        .iter()
        .map(|&(_, lag)| lag)
        .max()
        .map_or(0, |m| m.saturating_sub(1));
    RunRecord {
        strategy: strategy.name().to_string(),
        k: strategy.k(),
        t_delay_ms: strategy.t_delay_ms(),
        seed,
        success: report.success,
        reorg_len: report.reorg_length,
        stall_slots,
        adv_votes_spent: trace.adv_votes_released,
        offenses: detect_slashing(out.view.all_votes()).len(),
        finality_delay_epochs,
        attack_slot: report.attack_slot,
        orphaned_honest_blocks: orphaned,
        expired_target_votes: trace.expired_target_votes,
        max_aggregate_backlog: trace.aggregate_backlog.iter().copied().max().unwrap_or(0),
        aggregate_backlog: trace.aggregate_backlog.clone(),
        wait_epochs: trace.wait_epochs,
        splits: trace.splits.clone(),
        justified: trace.justified.clone(),
        finalized: trace.finalized.clone(),
        epoch_lag: trace.epoch_lag.clone(),
        note: report.note,
    }
}

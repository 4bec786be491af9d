//! Acceptance criteria, one pass/fail line each. Exits nonzero if any fails.

mod common;

use std::collections::HashSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gasper_lab::engine::{SeededRandom, SimOutcome};
use gasper_lab::experiments::{
    budget_refined, budget_targeted, run_detailed, run_trials, selection_probs, sweep_tdelay, write_results,
    DelaySpec, ExperimentConfig, RunRecord,
};
use gasper_lab::gasper::{detect_slashing, ghost_head, BlockId, Epoch, Origin, Slot, TieBreak};
use gasper_lab::net::{synthetic_trace, DelayModel, SyntheticSender};
use gasper_lab::validators::{AdversarySelection, StrategyConfig};
use gasper_lab::ProtocolParams;
use rand::Rng;

/// Simulation count and slashing offenses over every run made here.
#[derive(Default)]
struct Ledger {
    runs: u64,
    offenses: u64,
}

impl Ledger {
    fn run(&mut self, cfg: &ExperimentConfig, network: &DelayModel, seed: u64) -> (RunRecord, SimOutcome) {
        let (record, out) = run_detailed(cfg, &cfg.strategy, network, seed, false).expect("simulation runs");
        self.runs += 1;
        self.offenses += detect_slashing(out.adversarial_votes.iter().map(|v| &v.vote)).len() as u64;
        (record, out)
    }

    fn count(&mut self, records: &[RunRecord]) {
        self.runs += records.len() as u64;
        self.offenses += records.iter().map(|r| r.offenses as u64).sum::<u64>();
    }
}

type Verdict = (bool, String);

fn fork_choice_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = SeededRandom::new(0xF0C5);
    let cases = 20_000;
    let mut mismatches = 0;
    for i in 0..cases {
        let t = common::random_tree(&mut rng, 8, 16);
        let tiebreak = if i % 2 == 0 { TieBreak::LowestId } else { TieBreak::HighestId };
        let got = ghost_head(&common::build(&t), Slot(t.current), tiebreak);
        if got != BlockId(common::oracle(&t, tiebreak) as u32) {
            mismatches += 1;
        }
    }
    let took = start.elapsed();
    (
        mismatches == 0 && took < Duration::from_secs(60),
        format!("{cases} trees, {mismatches} mismatches, {took:.2?}"),
    )
}

fn refined_config() -> ExperimentConfig {
    ExperimentConfig {
        delay: DelaySpec::Zero,
        strategy: StrategyConfig::RefinedReorg { k: 1 },
        adversary: AdversarySelection::Placed {
            attack_slot: 5,
            per_slot: vec![1],
        },
        horizon: 12,
        ..Default::default()
    }
}

fn one_reorg(ledger: &mut Ledger) -> Verdict {
    let cfg = refined_config();
    let net = DelayModel::Zero;
    let mut ok = 0;
    for seed in 0..100 {
        let (r, out) = ledger.run(&cfg, &net, seed);
        let head = out.final_head(cfg.tiebreak);
        let canonical: HashSet<BlockId> = out.view.ancestors(head).map(|b| b.id).collect();
        let orphans: Vec<_> = out
            .blocks
            .iter()
            .filter(|b| out.public[b.id.0 as usize] && !canonical.contains(&b.id))
            .map(|b| (b.slot, b.origin))
            .collect();
        if r.success == Some(true) && orphans == [(Slot(6), Origin::Honest)] {
            ok += 1;
        }
    }
    (ok == 100, format!("{ok}/100 runs reorged, orphaning exactly the next honest block"))
}

fn budgets() -> Verdict {
    let mut bad = Vec::new();
    for k in 1..=12 {
        for w in 0..=256 {
            if budget_refined(k, w).ok() != Some(w * (k - 1) + 1) {
                bad.push(format!("refined({k},{w})"));
            }
        }
    }
    let targeted = budget_targeted(10).ok();
    let examples = [budget_refined(1, 109).ok(), budget_refined(2, 109).ok(), budget_targeted(2).ok()];
    let pass = bad.is_empty() && targeted == Some(19) && examples == [Some(1), Some(110), Some(3)];
    (pass, format!("targeted(10) = {targeted:?}, refined grid mismatches {}", bad.len()))
}

fn selection(samples: u64) -> Verdict {
    let Ok(p) = selection_probs(200, 230_000, 32, 7200) else {
        return (false, "calculator rejected inputs".into());
    };
    let mut rng = SeededRandom::new(0x5E1);
    let (mut prop, mut comm, mut both) = (0u64, 0u64, 0u64);
    for _ in 0..samples {
        let has_proposal = (0..7200).any(|_| rng.random_range(0..230_000u32) < 200);
        // Each adversarial validator's committee slot is uniform over the epoch.
        let in_committee = (0..200).any(|_| rng.random_range(0..32u32) == 0);
        prop += has_proposal as u64;
        comm += in_committee as u64;
        both += (has_proposal && in_committee) as u64;
    }
    let est = |n: u64| n as f64 / samples as f64;
    let close = |n: u64, want: f64| (est(n) - want).abs() <= 0.005;
    let in_band = |x: f64| (0.997..=0.999).contains(&x);
    let pass = in_band(p.p_proposer)
        && in_band(p.p_committee)
        && p.p_joint >= 0.996
        && close(prop, p.p_proposer)
        && close(comm, p.p_committee)
        && close(both, p.p_joint);
    (
        pass,
        format!(
            "p_proposer {:.5} (mc {:.5}), p_committee {:.5} (mc {:.5}), p_joint {:.5} (mc {:.5})",
            p.p_proposer,
            est(prop),
            p.p_committee,
            est(comm),
            p.p_joint,
            est(both)
        ),
    )
}

fn balancing_config(t_delay_ms: u64, horizon: u64) -> ExperimentConfig {
    ExperimentConfig {
        params: ProtocolParams {
            beta: 0.15,
            ..Default::default()
        },
        delay: DelaySpec::Lognormal {
            median_ms: 100.0,
            sigma: 0.1,
        },
        strategy: StrategyConfig::Balancing { t_delay_ms },
        adversary: AdversarySelection::Fraction,
        horizon,
        ..Default::default()
    }
}

/// Mean epochs the balancing attack waits for its opening, measured through
/// the simulator's own role draws until `epochs` epochs have been examined.
fn opportune(ledger: &mut Ledger, epochs: u64) -> Verdict {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for beta in [0.1, 0.15, 0.2] {
        let mut cfg = balancing_config(100, 2);
        cfg.params = ProtocolParams::full_committees(32, beta);
        let net = DelayModel::Zero;
        let (mut seen, mut runs) = (0u64, 0u64);
        while seen < epochs {
            let (r, _) = ledger.run(&cfg, &net, runs);
            seen += r.wait_epochs;
            runs += 1;
        }
        let mean = seen as f64 / runs as f64;
        let want = 1.0 / (beta * beta);
        pass &= (mean / want - 1.0).abs() <= 0.15;
        parts.push(format!("beta {beta}: {mean:.1} vs {want:.1}"));
    }
    let took = start.elapsed();
    pass &= took < Duration::from_secs(60);
    (pass, format!("{}, {took:.2?}", parts.join("; ")))
}

fn sweep(ledger: &mut Ledger, stalls: &mut Vec<RunRecord>) -> Verdict {
    let start = Instant::now();
    let senders = [SyntheticSender {
        sender: 0,
        median_ms: 100.0,
        sigma: 0.1,
    }];
    let trace = synthetic_trace(&senders, 750, 20, &mut SeededRandom::new(0x7ACE)).expect("trace");
    let network = DelayModel::Empirical {
        trace: Arc::new(trace),
        sender: 0,
    };
    let mut cfg = balancing_config(100, 200);
    cfg.trials = 10;
    let points: Vec<u64> = (60..=140).step_by(5).collect();
    let result = sweep_tdelay(&cfg, &network, &points, None).expect("sweep runs");
    ledger.count(&result.records);
    stalls.extend(result.records.iter().cloned());
    let peak = result.argmax().expect("non-empty grid");
    let off = |t: i64| result.at(t as u64).map_or(0.0, |p| p.mean_stall_slots);
    let side = off(peak.t_delay_ms as i64 - 30).max(off(peak.t_delay_ms as i64 + 30));
    let took = start.elapsed();
    let pass = peak.t_delay_ms.abs_diff(100) <= 5
        && peak.mean_stall_slots >= 10.0 * side
        && took < Duration::from_secs(600);
    (
        pass,
        format!(
            "argmax {} ms at {:.1} slots, max at peak +-30 ms {:.1} slots, {took:.2?}",
            peak.t_delay_ms, peak.mean_stall_slots, side
        ),
    )
}

fn combined_targeted(ledger: &mut Ledger) -> Verdict {
    let cfg = ExperimentConfig {
        delay: DelaySpec::Lognormal {
            median_ms: 100.0,
            sigma: 0.5,
        },
        strategy: StrategyConfig::Combined {
            k: 2,
            t_delay_ms: 100,
            rebalance_budget_per_slot: u64::MAX,
        },
        adversary: AdversarySelection::Placed {
            attack_slot: 5,
            per_slot: vec![1, 2],
        },
        adversarial_delay: true,
        horizon: 10,
        ..Default::default()
    };
    let net = cfg.delay.to_model(None).expect("delay model");
    let mut ok = 0;
    for seed in 0..100 {
        let (r, out) = ledger.run(&cfg, &net, seed);
        let voters: HashSet<_> = out.adversarial_votes.iter().map(|v| v.vote.validator).collect();
        if r.success == Some(true) && r.reorg_len == 2 && voters.len() <= 3 {
            ok += 1;
        }
    }
    (ok == 100, format!("{ok}/100 runs reorged 2 blocks with 3 adversarial attesters"))
}

fn extra_attacks(ledger: &mut Ledger, target: u64) {
    let mut seed = 0;
    while ledger.runs < target {
        let mut refined = refined_config();
        refined.strategy = StrategyConfig::RefinedReorg { k: 2 };
        refined.adversary = AdversarySelection::Placed {
            attack_slot: 5,
            per_slot: vec![1, 64],
        };
        refined.adversarial_delay = true;
        let mut probabilistic = balancing_config(100, 10);
        probabilistic.params.beta = 0.0;
        probabilistic.strategy = StrategyConfig::Combined {
            k: 2,
            t_delay_ms: 100,
            rebalance_budget_per_slot: 11,
        };
        probabilistic.adversary = AdversarySelection::Placed {
            attack_slot: 5,
            per_slot: vec![11, 11],
        };
        for cfg in [refined_config(), refined, probabilistic] {
            let net = cfg.delay.to_model(None).expect("delay model");
            ledger.run(&cfg, &net, seed);
        }
        seed += 1;
    }
}

fn slashing(ledger: &mut Ledger) -> Verdict {
    extra_attacks(ledger, 1000);
    (
        ledger.offenses == 0 && ledger.runs >= 1000,
        format!("{} offenses over {} simulations", ledger.offenses, ledger.runs),
    )
}

fn no_finality_under_tie(records: &[RunRecord]) -> Verdict {
    let epoch_slots = ProtocolParams::default().slots_per_epoch;
    let mut checked = 0;
    let mut violations = 0;
    for r in records {
        let Some(stall) = r.stall_slots else { continue };
        if stall < 2 * epoch_slots {
            continue;
        }
        checked += 1;
        let early = |v: &[(u64, gasper_lab::gasper::Checkpoint)]| {
            v.iter().any(|&(slot, c)| c.epoch > Epoch(0) && slot <= stall)
        };
        if early(&r.justified) || early(&r.finalized) {
            violations += 1;
        }
    }
    (
        checked > 0 && violations == 0,
        format!("{checked} runs stalled at least 2 epochs, {violations} justified or finalized during the tie"),
    )
}

fn determinism() -> Verdict {
    let mut configs = vec![refined_config(), balancing_config(100, 96)];
    configs[1].trials = 3;
    let mut identical = 0;
    for cfg in &configs {
        let net = cfg.delay.to_model(None).expect("delay model");
        let write = || {
            let mut buf = Vec::new();
            write_results(&run_trials(cfg, &net).expect("runs"), &mut buf).expect("csv");
            buf
        };
        identical += (write() == write()) as usize;
    }
    let mut cfg = balancing_config(100, 64);
    cfg.trials = 2;
    let net = cfg.delay.to_model(None).expect("delay model");
    let csv = |jobs| {
        let mut buf = Vec::new();
        sweep_tdelay(&cfg, &net, &[90, 100], jobs)
            .expect("sweep")
            .write_csv(&mut buf)
            .expect("csv");
        buf
    };
    identical += (csv(Some(1)) == csv(Some(2))) as usize;
    (identical == 3, format!("{identical}/3 result files byte-identical on rerun"))
}

fn main() -> ExitCode {
    let mut ledger = Ledger::default();
    let mut stalls = Vec::new();
    let results: Vec<(&str, Verdict)> = vec![
        ("fork-choice oracle equivalence", fork_choice_oracle()),
        ("one-block reorg with one committee member", one_reorg(&mut ledger)),
        ("budget formulas", budgets()),
        ("selection probabilities", selection(100_000)),
        ("opportune-epoch wait", opportune(&mut ledger, 40_000)),
        ("balancing delay sweep", sweep(&mut ledger, &mut stalls)),
        ("combined 2-reorg with targeted delivery", combined_targeted(&mut ledger)),
        ("non-slashability", slashing(&mut ledger)),
        ("no finality while tied", no_finality_under_tie(&stalls)),
        ("determinism", determinism()),
    ];

    let mut failed = 0;
    for (i, (name, (pass, detail))) in results.iter().enumerate() {
        let tag = if *pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2}. {name}: {detail}", i + 1);
        failed += !pass as usize;
    }
    println!("acceptance: {}/{} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

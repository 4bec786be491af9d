use gasper_lab::engine::SeededRandom;
use gasper_lab::experiments::{opportune_wait, selection_probs};
use gasper_lab::gasper::{Epoch, Slot};
use gasper_lab::validators::assign_roles;
use gasper_lab::ProtocolParams;

fn small_params(n: u32) -> ProtocolParams {
    ProtocolParams {
        n_validators: n,
        committee_size: 8,
        ..Default::default()
    }
}

#[test]
fn selection_probs_match_role_sampling() {
    let (n_adv, horizon) = (4u32, 64u64);
    let params = small_params(256);
    let spe = params.slots_per_epoch;
    let want = selection_probs(n_adv as u64, 256, spe, horizon).unwrap();
    let samples = 100_000u64;
    let (mut prop, mut comm, mut both) = (0u64, 0u64, 0u64);
    let root = SeededRandom::new(42);
    for i in 0..samples {
        let mut rng = root.fork(1, i);
        let epochs: Vec<_> = (0..horizon.div_ceil(spe)).map(|e| assign_roles(&params, Epoch(e), &mut rng)).collect();
        let p = (0..horizon).any(|s| epochs[(s / spe) as usize].proposer(Slot(s)).0 < n_adv);
        let c = epochs[0].committee(Slot(0)).iter().any(|v| v.0 < n_adv);
        prop += p as u64;
        comm += c as u64;
        both += (p && c) as u64;
    }
    let est = |k: u64| k as f64 / samples as f64;
    assert!((est(prop) - want.p_proposer).abs() <= 0.005, "{} vs {}", est(prop), want.p_proposer);
    assert!((est(comm) - want.p_committee).abs() <= 0.005, "{} vs {}", est(comm), want.p_committee);
    assert!((est(both) - want.p_joint).abs() <= 0.005, "{} vs {}", est(both), want.p_joint);
}

#[test]
fn opportune_wait_matches_epoch_sampling() {
    let params = small_params(1000);
    let epochs = 100_000u64;
    for beta in [0.1, 0.15, 0.2] {
        let n_adv = (beta * 1000.0) as u32;
        let root = SeededRandom::new(7);
        let hits = (0..epochs)
            .filter(|&e| {
                let roles = assign_roles(&params, Epoch(e), &mut root.fork(1, e));
                let first = params.first_slot(Epoch(e)).0;
                roles.proposer(Slot(first)).0 < n_adv && roles.proposer(Slot(first + 1)).0 < n_adv
            })
            .count();
        let empirical = epochs as f64 / hits as f64;
        let formula = opportune_wait(beta).unwrap();
        assert!((empirical / formula - 1.0).abs() <= 0.15, "beta {beta}: {empirical} vs {formula}");
    }
}

//! Shared by the integration tests: an exhaustive fork-choice oracle.

#![allow(dead_code)]

use std::collections::HashMap;

use gasper_lab::gasper::{Block, BlockId, ChainView, Checkpoint, Origin, Slot, TieBreak, ValidatorId, Vote};
use rand::Rng;

pub const N: u32 = 8;

#[derive(Clone, Debug)]
pub struct Tree {
    /// (parent index, slot) for blocks 1..; block 0 is genesis.
    pub blocks: Vec<(usize, u64)>,
    /// (validator, vote slot, head index) in arrival order.
    pub votes: Vec<(u32, u64, usize)>,
    pub current: u64,
}

pub fn no_link_vote(validator: u32, slot: u64, head: usize) -> Vote {
    Vote {
        validator: ValidatorId(validator),
        slot: Slot(slot),
        head: BlockId(head as u32),
        ffg_source: Checkpoint::genesis(),
        ffg_target: Checkpoint::genesis(),
    }
}

pub fn build(t: &Tree) -> ChainView {
    let mut view = ChainView::with_threshold(N, 6);
    for (i, &(p, s)) in t.blocks.iter().enumerate() {
        view.insert_block(Block {
            id: BlockId(i as u32 + 1),
            parent: Some(BlockId(p as u32)),
            slot: Slot(s),
            proposer: None,
            origin: Origin::Honest,
        });
    }
    for &(v, s, h) in &t.votes {
        view.insert_vote(no_link_vote(v, s, h));
    }
    view
}

/// Brute force: count, for every block, the valid latest votes whose head
/// chain passes through it, then walk down from genesis.
pub fn oracle(t: &Tree, tiebreak: TieBreak) -> usize {
    let n = t.blocks.len() + 1;
    let parent = |i: usize| if i == 0 { None } else { Some(t.blocks[i - 1].0) };
    let slot = |i: usize| if i == 0 { 0 } else { t.blocks[i - 1].1 };

    let mut latest: HashMap<u32, (u64, usize)> = HashMap::new();
    for &(v, s, h) in &t.votes {
        if s >= t.current {
            continue;
        }
        match latest.get(&v) {
            Some(&(ls, _)) if ls >= s => {}
            _ => {
                latest.insert(v, (s, h));
            }
        }
    }
    let mut weight = vec![0u64; n];
    for &(s, h) in latest.values() {
        if slot(h) > s {
            continue;
        }
        let mut cur = Some(h);
        while let Some(b) = cur {
            weight[b] += 1;
            cur = parent(b);
        }
    }
    let mut head = 0;
    loop {
        let kids: Vec<usize> = (1..n).filter(|&c| parent(c) == Some(head)).collect();
        let Some(&first) = kids.first() else { return head };
        let mut best = first;
        for &c in &kids[1..] {
            let better = weight[c] > weight[best]
                || (weight[c] == weight[best]
                    && tiebreak.prefer(BlockId(best as u32), BlockId(c as u32)) == BlockId(c as u32));
            if better {
                best = c;
            }
        }
        head = best;
    }
}


/// Random tree of up to `max_blocks` blocks (genesis included) and up to
/// `max_votes` votes, same shape as the property-test generator.
pub fn random_tree<R: Rng>(rng: &mut R, max_blocks: usize, max_votes: usize) -> Tree {
    let n = rng.random_range(1..=max_blocks);
    let mut slots = vec![0u64];
    let mut blocks = Vec::new();
    for i in 1..n {
        let p = rng.random_range(0..i);
        let bump = if p == 0 { 0 } else { 1 };
        let s = slots[p] + bump + rng.random_range(0..3);
        slots.push(s);
        blocks.push((p, s));
    }
    let votes = (0..rng.random_range(0..=max_votes))
        .map(|_| (rng.random_range(0..N), rng.random_range(0..16), rng.random_range(0..n)))
        .collect();
    Tree { blocks, votes, current: rng.random_range(1..16) }
}

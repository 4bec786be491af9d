use std::collections::{BTreeMap, HashMap, HashSet};

use crate::gasper::{Block, BlockId, Checkpoint, Vote};

pub(crate) const SUBCOMMITTEE_SIZE: usize = 128;
pub(crate) const BLOCK_CAPACITY: usize = 128;
/// Aggregates older than this many slots can no longer be included.
pub(crate) const EXPIRY_SLOTS: u64 = 32;

/// One aggregate: the votes of a subcommittee that agree on everything.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct AggKey {
    slot: u64,
    subcommittee: u32,
    head: BlockId,
    source: Checkpoint,
    target: Checkpoint,
}

/// Vote aggregates waiting for inclusion, and which block included what.
#[derive(Debug, Default)]
pub(crate) struct Aggregates {
    pool: BTreeMap<AggKey, u64>,
    inclusions: HashMap<BlockId, Vec<AggKey>>,
}

impl Aggregates {
    pub(crate) fn add_vote(&mut self, vote: &Vote, committee_position: usize) {
        let key = AggKey {
            slot: vote.slot.0,
            subcommittee: (committee_position / SUBCOMMITTEE_SIZE) as u32,
            head: vote.head,
            source: vote.ffg_source,
            target: vote.ffg_target,
        };
        *self.pool.entry(key).or_default() += 1;
    }

    fn on_chain(&self, blocks: &[Block], tip: BlockId, min_slot: u64) -> HashSet<AggKey> {
        let mut out = HashSet::new();
        let mut cur = Some(tip);
        while let Some(id) = cur {
            let b = &blocks[id.0 as usize];
            if b.slot.0 < min_slot {
                break;
            }
            if let Some(keys) = self.inclusions.get(&id) {
                out.extend(keys.iter().copied());
            }
            cur = b.parent;
        }
        out
    }

    /// Fill a block of `slot` on `parent` with pending aggregates, oldest first.
    pub(crate) fn fill_block(&mut self, blocks: &[Block], block: BlockId, parent: BlockId, slot: u64) {
        let lo = slot.saturating_sub(EXPIRY_SLOTS);
        let have = self.on_chain(blocks, parent, lo);
        let picked: Vec<AggKey> = self
            .pool
            .keys()
            .filter(|k| k.slot >= lo && k.slot < slot && !have.contains(k))
            .take(BLOCK_CAPACITY)
            .copied()
            .collect();
        if !picked.is_empty() {
            self.inclusions.insert(block, picked);
        }
    }

    /// Aggregates included by public blocks off the canonical chain that the
    /// canonical chain has not re-included and that have not yet expired.
    pub(crate) fn deconfirmed(
        &self,
        blocks: &[Block],
        public: &[bool],
        canonical: &HashSet<BlockId>,
        tip: BlockId,
        slot: u64,
    ) -> u64 {
        let lo = slot.saturating_sub(EXPIRY_SLOTS);
        let have = self.on_chain(blocks, tip, lo);
        let mut orphaned: HashSet<AggKey> = HashSet::new();
        for b in blocks.iter().rev() {
            if b.slot.0 + EXPIRY_SLOTS + 1 < lo {
                break;
            }
            if !public[b.id.0 as usize] || canonical.contains(&b.id) {
                continue;
            }
            if let Some(keys) = self.inclusions.get(&b.id) {
                orphaned.extend(keys.iter().filter(|k| k.slot >= lo && !have.contains(k)));
            }
        }
        orphaned.len() as u64
    }

    /// Votes in aggregates that expired without inclusion on the chain ending
    /// at `tip`, counting only aggregates whose window closed before `end_slot`.
    pub(crate) fn expired_votes(&self, blocks: &[Block], tip: BlockId, end_slot: u64) -> u64 {
        let have = self.on_chain(blocks, tip, 0);
        self.pool
            .iter()
            .filter(|(k, _)| k.slot + EXPIRY_SLOTS < end_slot && !have.contains(k))
            .map(|(_, &n)| n)
            .sum()
    }
}

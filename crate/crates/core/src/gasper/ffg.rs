use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ChainView, Checkpoint, ValidatorId};

/// Source → target pair of an FFG vote.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FfgLink {
    pub source: Checkpoint,
    pub target: Checkpoint,
}

/// Checkpoints that become justified given the already-justified set: a
/// target is justified once a link from a justified source carries at least
/// `threshold` distinct validators. Iterates to a fixpoint.
pub(crate) fn justify_fixpoint(
    tally: &BTreeMap<FfgLink, BTreeSet<ValidatorId>>,
    threshold: usize,
    justified: &BTreeSet<Checkpoint>,
) -> Vec<Checkpoint> {
    let mut known = justified.clone();
    let mut newly = Vec::new();
    loop {
        let mut changed = false;
        for (link, voters) in tally {
            if voters.len() >= threshold
                && link.source.epoch < link.target.epoch
                && known.contains(&link.source)
                && !known.contains(&link.target)
            {
                known.insert(link.target);
                newly.push(link.target);
                changed = true;
            }
        }
        if !changed {
            return newly;
        }
    }
}

/// Sources of justified links into the very next epoch.
pub(crate) fn finalized_by(
    tally: &BTreeMap<FfgLink, BTreeSet<ValidatorId>>,
    threshold: usize,
    justified: &BTreeSet<Checkpoint>,
) -> Vec<Checkpoint> {
    tally
        .iter()
        .filter(|(link, voters)| {
            voters.len() >= threshold
                && justified.contains(&link.source)
                && justified.contains(&link.target)
                && link.target.epoch.0 == link.source.epoch.0 + 1
        })
        .map(|(link, _)| link.source)
        .collect()
}

/// Recompute `(justified, finalized)` from the view's FFG tally, starting
/// from genesis. The result never regresses below what the view already
/// holds.
pub fn process_ffg(view: &ChainView) -> (Checkpoint, Checkpoint) {
    let genesis = BTreeSet::from([Checkpoint::genesis()]);
    let mut justified = genesis.clone();
    justified.extend(justify_fixpoint(view.ffg_tally(), view.threshold(), &genesis));
    let mut finalized = genesis;
    finalized.extend(finalized_by(view.ffg_tally(), view.threshold(), &justified));

    let pick = |set: &BTreeSet<Checkpoint>, current: Checkpoint| {
        let top = set.iter().map(|c| c.epoch).max().unwrap_or(current.epoch);
        if top > current.epoch {
            set.iter().find(|c| c.epoch == top).copied().unwrap_or(current)
        } else {
            current
        }
    };
    (
        pick(&justified, view.justified()),
        pick(&finalized, view.finalized()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gasper::{Block, BlockId, Epoch, Origin, Slot, Vote};

    fn view_with_chain() -> ChainView {
        // genesis <- b1 (slot 31) <- b2 (slot 63)
        let mut view = ChainView::with_threshold(12, 8);
        for (id, parent, slot) in [(1, 0, 31), (2, 1, 63)] {
            view.insert_block(Block {
                id: BlockId(id),
                parent: Some(BlockId(parent)),
                slot: Slot(slot),
                proposer: None,
                origin: Origin::Honest,
            });
        }
        view
    }

    fn cp(epoch: u64, block: u32) -> Checkpoint {
        Checkpoint {
            epoch: Epoch(epoch),
            block: BlockId(block),
        }
    }

    fn ffg_vote(v: u32, slot: u64, source: Checkpoint, target: Checkpoint) -> Vote {
        Vote {
            validator: ValidatorId(v),
            slot: Slot(slot),
            head: target.block,
            ffg_source: source,
            ffg_target: target,
        }
    }

    #[test]
    fn below_threshold_does_not_justify() {
        let mut view = view_with_chain();
        for v in 0..7 {
            view.insert_vote(ffg_vote(v, 32 + u64::from(v), Checkpoint::genesis(), cp(1, 1)));
        }
        assert_eq!(view.justified(), Checkpoint::genesis());
        assert_eq!(process_ffg(&view).0, Checkpoint::genesis());
    }

    #[test]
    fn twelve_validators_justify_then_finalize() {
        // ⌈2·12/3⌉ = 8 votes per link.
        let mut view = view_with_chain();
        for v in 0..8 {
            view.insert_vote(ffg_vote(v, 32 + u64::from(v), Checkpoint::genesis(), cp(1, 1)));
        }
        assert_eq!(view.justified(), cp(1, 1));
        assert_eq!(view.finalized(), Checkpoint::genesis());
        for v in 0..8 {
            view.insert_vote(ffg_vote(v, 64 + u64::from(v), cp(1, 1), cp(2, 2)));
        }
        assert_eq!(view.justified(), cp(2, 2));
        assert_eq!(view.finalized(), cp(1, 1));
        assert_eq!(process_ffg(&view), (cp(2, 2), cp(1, 1)));
    }

    #[test]
    fn link_from_unjustified_source_is_ignored() {
        let mut view = view_with_chain();
        for v in 0..8 {
            view.insert_vote(ffg_vote(v, 64 + u64::from(v), cp(1, 1), cp(2, 2)));
        }
        assert_eq!(view.justified(), Checkpoint::genesis());
        // Once the source gets justified, the pending link cascades.
        for v in 0..8 {
            view.insert_vote(ffg_vote(v, 32 + u64::from(v), Checkpoint::genesis(), cp(1, 1)));
        }
        assert_eq!(view.justified(), cp(2, 2));
        assert_eq!(view.finalized(), cp(1, 1));
    }

    #[test]
    fn skipped_epoch_justifies_without_finalizing() {
        let mut view = view_with_chain();
        for v in 0..8 {
            view.insert_vote(ffg_vote(v, 64 + u64::from(v), Checkpoint::genesis(), cp(2, 2)));
        }
        assert_eq!(view.justified(), cp(2, 2));
        assert_eq!(view.finalized(), Checkpoint::genesis());
    }
}

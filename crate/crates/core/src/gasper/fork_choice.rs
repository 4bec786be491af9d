use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{BlockId, ChainView, Epoch, Slot, Vote, GENESIS};

/// Deterministic rule for choosing between equally weighted siblings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// The sibling created first wins.
    #[default]
    LowestId,
    HighestId,
}

impl TieBreak {
    /// The favored block of two equally weighted siblings.
    pub fn prefer(self, a: BlockId, b: BlockId) -> BlockId {
        match self {
            TieBreak::LowestId => a.min(b),
            TieBreak::HighestId => a.max(b),
        }
    }
}

/// Each validator's latest vote from before `current_slot`, keeping only
/// votes whose head is known and not from the vote's future.
pub fn filter_valid_votes(view: &ChainView, current_slot: Slot) -> Vec<&Vote> {
    (0..view.n_validators())
        .filter_map(|v| view.latest_before(super::ValidatorId(v), current_slot))
        .filter(|vote| {
            view.block(vote.head)
                .is_some_and(|head| head.slot <= vote.slot)
        })
        .collect()
}

/// Weight of every block reachable from `root`: number of `votes` whose head
/// is the block or one of its descendants.
pub fn subtree_weights<'v>(
    view: &ChainView,
    root: BlockId,
    votes: impl IntoIterator<Item = &'v Vote>,
) -> HashMap<BlockId, u64> {
    let mut weights: HashMap<BlockId, u64> = HashMap::new();
    for vote in votes {
        *weights.entry(vote.head).or_default() += 1;
    }
    // Iterative post-order over the subtree rooted at `root`.
    let mut out = HashMap::new();
    let mut stack = vec![(root, false)];
    while let Some((id, expanded)) = stack.pop() {
        if expanded {
            let own = weights.get(&id).copied().unwrap_or(0);
            let below: u64 = view.children(id).iter().map(|c| out[c]).sum();
            out.insert(id, own + below);
        } else {
            stack.push((id, true));
            for &child in view.children(id) {
                stack.push((child, false));
            }
        }
    }
    out
}

/// LMD GHOST: descend from the justified block, at each step taking the
/// child with the most valid latest votes in its subtree.
pub fn ghost_head(view: &ChainView, current_slot: Slot, tiebreak: TieBreak) -> BlockId {
    let root = view.justified().block;
    let root = if view.contains_block(root) { root } else { GENESIS };
    let votes = filter_valid_votes(view, current_slot);
    let weights = subtree_weights(view, root, votes);
    let mut head = root;
    loop {
        let mut best: Option<(u64, BlockId)> = None;
        for &child in view.children(head) {
            let w = weights[&child];
            best = match best {
                Some((bw, _)) if w > bw => Some((w, child)),
                Some((bw, b)) if w == bw => Some((w, tiebreak.prefer(b, child))),
                None => Some((w, child)),
                keep => keep,
            };
        }
        match best {
            Some((_, next)) => head = next,
            None => return head,
        }
    }
}

/// Chain-relative epoch boundary block: the highest ancestor of `tip` (tip
/// included) whose slot is strictly before the first slot of `epoch`.
/// Genesis precedes every slot and is the fallback.
pub fn epoch_boundary_block(
    view: &ChainView,
    tip: BlockId,
    epoch: Epoch,
    slots_per_epoch: u64,
) -> BlockId {
    let first = Slot(epoch.0 * slots_per_epoch);
    view.ancestors(tip)
        .find(|b| b.is_genesis() || b.slot < first)
        .map(|b| b.id)
        .unwrap_or(GENESIS)
}

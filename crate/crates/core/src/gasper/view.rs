use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ffg::{self, FfgLink};
use super::{Block, BlockId, Checkpoint, Message, Slot, ValidatorId, Vote, GENESIS};
use crate::params::ProtocolParams;

/// One participant's knowledge: received blocks and votes plus the FFG state
/// derived from them.
///
/// Blocks may arrive before their parent; they stay unreachable from the
/// fork-choice root until the parent shows up.
#[derive(Clone, Debug)]
pub struct ChainView {
    threshold: usize,
    blocks: HashMap<BlockId, Block>,
    children: HashMap<BlockId, Vec<BlockId>>,
    /// Per validator, ordered by vote slot; equal slots keep arrival order.
    votes: Vec<Vec<Vote>>,
    ffg_tally: BTreeMap<FfgLink, BTreeSet<ValidatorId>>,
    justified_set: BTreeSet<Checkpoint>,
    finalized_set: BTreeSet<Checkpoint>,
    justified: Checkpoint,
    finalized: Checkpoint,
    journal: Option<Vec<Undo>>,
}

#[derive(Clone, Debug)]
enum Undo {
    Block(BlockId),
    Vote { validator: ValidatorId, index: usize },
    Tally { link: FfgLink, validator: ValidatorId },
    Justified(Checkpoint),
    Finalized(Checkpoint),
    Heads { justified: Checkpoint, finalized: Checkpoint },
}

impl ChainView {
    pub fn new(params: &ProtocolParams) -> Self {
        Self::with_threshold(params.n_validators, params.supermajority())
    }

    /// A view over `n_validators` with an explicit FFG vote threshold.
    pub fn with_threshold(n_validators: u32, threshold: usize) -> Self {
        let genesis = Block::genesis();
        let mut blocks = HashMap::new();
        blocks.insert(genesis.id, genesis);
        let cp = Checkpoint::genesis();
        ChainView {
            threshold,
            blocks,
            children: HashMap::new(),
            votes: vec![Vec::new(); n_validators as usize],
            ffg_tally: BTreeMap::new(),
            justified_set: BTreeSet::from([cp]),
            finalized_set: BTreeSet::from([cp]),
            justified: cp,
            finalized: cp,
            journal: None,
        }
    }

    pub fn n_validators(&self) -> u32 {
        self.votes.len() as u32
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn apply(&mut self, msg: &Message) -> bool {
        match msg {
            Message::Block(b) => self.insert_block(b.clone()),
            Message::Vote(v) => self.insert_vote(v.clone()),
        }
    }

    /// Returns false if the block was already known.
    pub fn insert_block(&mut self, block: Block) -> bool {
        if self.blocks.contains_key(&block.id) {
            return false;
        }
        let id = block.id;
        if let Some(parent) = block.parent {
            self.children.entry(parent).or_default().push(id);
        }
        self.blocks.insert(id, block);
        self.record(Undo::Block(id));
        true
    }

    /// Returns false for an exact duplicate of a vote already held.
    pub fn insert_vote(&mut self, vote: Vote) -> bool {
        let validator = vote.validator;
        let list = &mut self.votes[validator.0 as usize];
        if list.contains(&vote) {
            return false;
        }
        let index = list.partition_point(|v| v.slot <= vote.slot);
        let link = vote.link();
        let counts_for_ffg = vote.has_ffg_link();
        list.insert(index, vote);
        self.record(Undo::Vote { validator, index });

        if counts_for_ffg {
            let voters = self.ffg_tally.entry(link).or_default();
            if voters.insert(validator) {
                let reached = voters.len() >= self.threshold;
                self.record(Undo::Tally { link, validator });
                if reached {
                    self.update_ffg();
                }
            }
        }
        true
    }

    fn update_ffg(&mut self) {
        let newly = ffg::justify_fixpoint(&self.ffg_tally, self.threshold, &self.justified_set);
        for cp in &newly {
            self.justified_set.insert(*cp);
            self.record(Undo::Justified(*cp));
        }
        let finals = ffg::finalized_by(&self.ffg_tally, self.threshold, &self.justified_set);
        for cp in finals {
            if self.finalized_set.insert(cp) {
                self.record(Undo::Finalized(cp));
            }
        }
        let prev = Undo::Heads {
            justified: self.justified,
            finalized: self.finalized,
        };
        let mut changed = false;
        if let Some(j) = highest(&self.justified_set) {
            if j.epoch > self.justified.epoch {
                self.justified = j;
                changed = true;
            }
        }
        if let Some(f) = highest(&self.finalized_set) {
            if f.epoch > self.finalized.epoch {
                self.finalized = f;
                changed = true;
            }
        }
        if changed {
            self.record(prev);
        }
    }

    fn record(&mut self, undo: Undo) {
        if let Some(journal) = &mut self.journal {
            journal.push(undo);
        }
    }

    /// Start recording changes so that [`ChainView::rollback`] can revert them.
    pub fn begin_speculation(&mut self) {
        assert!(self.journal.is_none(), "nested speculation");
        self.journal = Some(Vec::new());
    }

    /// Revert everything applied since [`ChainView::begin_speculation`].
    pub fn rollback(&mut self) {
        let journal = self.journal.take().expect("rollback without speculation");
        for undo in journal.into_iter().rev() {
            match undo {
                Undo::Block(id) => {
                    let block = self.blocks.remove(&id).expect("journaled block");
                    if let Some(parent) = block.parent {
                        let kids = self.children.get_mut(&parent).expect("journaled child");
                        let popped = kids.pop();
                        debug_assert_eq!(popped, Some(id));
                        if kids.is_empty() {
                            self.children.remove(&parent);
                        }
                    }
                }
                Undo::Vote { validator, index } => {
                    self.votes[validator.0 as usize].remove(index);
                }
                Undo::Tally { link, validator } => {
                    let voters = self.ffg_tally.get_mut(&link).expect("journaled link");
                    voters.remove(&validator);
                    if voters.is_empty() {
                        self.ffg_tally.remove(&link);
                    }
                }
                Undo::Justified(cp) => {
                    self.justified_set.remove(&cp);
                }
                Undo::Finalized(cp) => {
                    self.finalized_set.remove(&cp);
                }
                Undo::Heads {
                    justified,
                    finalized,
                } => {
                    self.justified = justified;
                    self.finalized = finalized;
                }
            }
        }
    }

    /// Apply `msgs`, evaluate `f`, then revert the view to its prior state.
    pub fn with_overlay<'m, R>(
        &mut self,
        msgs: impl IntoIterator<Item = &'m Message>,
        f: impl FnOnce(&ChainView) -> R,
    ) -> R {
        self.begin_speculation();
        for m in msgs {
            self.apply(m);
        }
        let out = f(self);
        self.rollback();
        out
    }

    pub fn block(&self, id: BlockId) -> Option<&Block> {
        self.blocks.get(&id)
    }

    pub fn contains_block(&self, id: BlockId) -> bool {
        self.blocks.contains_key(&id)
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.values()
    }

    pub fn children(&self, id: BlockId) -> &[BlockId] {
        self.children.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Votes received from `validator`, in slot order.
    pub fn votes_of(&self, validator: ValidatorId) -> &[Vote] {
        &self.votes[validator.0 as usize]
    }

    pub fn all_votes(&self) -> impl Iterator<Item = &Vote> {
        self.votes.iter().flatten()
    }

    /// Most recent vote of `validator` among those with slot below `before`
    /// (first-arrived on equal slots).
    pub fn latest_before(&self, validator: ValidatorId, before: Slot) -> Option<&Vote> {
        let list = &self.votes[validator.0 as usize];
        let end = list.partition_point(|v| v.slot < before);
        let last = list[..end].last()?;
        let first_same = list[..end].partition_point(|v| v.slot < last.slot);
        Some(&list[first_same])
    }

    /// Latest message of `validator` regardless of slot.
    pub fn latest_message(&self, validator: ValidatorId) -> Option<&Vote> {
        self.latest_before(validator, Slot(u64::MAX))
    }

    pub fn justified(&self) -> Checkpoint {
        self.justified
    }

    pub fn finalized(&self) -> Checkpoint {
        self.finalized
    }

    pub fn justified_checkpoints(&self) -> &BTreeSet<Checkpoint> {
        &self.justified_set
    }

    pub fn finalized_checkpoints(&self) -> &BTreeSet<Checkpoint> {
        &self.finalized_set
    }

    pub fn ffg_tally(&self) -> &BTreeMap<FfgLink, BTreeSet<ValidatorId>> {
        &self.ffg_tally
    }

    /// Walk from `tip` to genesis (inclusive), stopping early at a missing parent.
    pub fn ancestors(&self, tip: BlockId) -> Ancestors<'_> {
        Ancestors {
            view: self,
            next: self.blocks.get(&tip).map(|b| b.id),
        }
    }

    /// Whether `ancestor` lies on the chain of `block` (a block is its own ancestor).
    pub fn is_ancestor(&self, ancestor: BlockId, block: BlockId) -> bool {
        let Some(target) = self.block(ancestor) else {
            return false;
        };
        self.ancestors(block)
            .take_while(|b| b.slot >= target.slot || b.id == GENESIS)
            .any(|b| b.id == ancestor)
    }

    /// Block ids from genesis to `tip`.
    pub fn chain(&self, tip: BlockId) -> Vec<BlockId> {
        let mut ids: Vec<BlockId> = self.ancestors(tip).map(|b| b.id).collect();
        ids.reverse();
        ids
    }
}

pub struct Ancestors<'a> {
    view: &'a ChainView,
    next: Option<BlockId>,
}

impl<'a> Iterator for Ancestors<'a> {
    type Item = &'a Block;

    fn next(&mut self) -> Option<&'a Block> {
        let block = self.view.blocks.get(&self.next?)?;
        self.next = block.parent;
        Some(block)
    }
}

fn highest(set: &BTreeSet<Checkpoint>) -> Option<Checkpoint> {
    // Checkpoint orders by epoch first; keep the first of equal epochs.
    let top = set.iter().next_back()?.epoch;
    set.iter().find(|c| c.epoch == top).copied()
}

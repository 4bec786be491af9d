//! Protocol data model and pure consensus logic.

mod ffg;
mod fork_choice;
mod slashing;
mod view;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ffg::{process_ffg, FfgLink};
pub use fork_choice::{
    epoch_boundary_block, filter_valid_votes, ghost_head, subtree_weights, TieBreak,
};
pub use slashing::{detect_slashing, OffenseKind, SlashingOffense};
pub use view::ChainView;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ValidatorId(pub u32);

/// Block identifiers are allocated in creation order, so a parent always has a
/// smaller id than its children.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Epoch(pub u64);

impl fmt::Display for ValidatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const GENESIS: BlockId = BlockId(0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Honest,
    Adversarial,
}

/// A node of the block tree.
///
/// Genesis carries slot 0 but precedes every proposal; a block proposed in
/// slot 0 may therefore have genesis as its parent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    pub parent: Option<BlockId>,
    pub slot: Slot,
    pub proposer: Option<ValidatorId>,
    pub origin: Origin,
}

impl Block {
    pub fn genesis() -> Self {
        Block {
            id: GENESIS,
            parent: None,
            slot: Slot(0),
            proposer: None,
            origin: Origin::Honest,
        }
    }

    pub fn is_genesis(&self) -> bool {
        self.parent.is_none()
    }
}

/// FFG checkpoint: an epoch paired with that epoch's boundary block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: Epoch,
    pub block: BlockId,
}

impl Checkpoint {
    pub fn genesis() -> Self {
        Checkpoint {
            epoch: Epoch(0),
            block: GENESIS,
        }
    }
}

/// A committee member's attestation: GHOST head vote plus FFG link.
///
/// Votes cast during epoch 0 carry the genesis self-link `(genesis@0 ->
/// genesis@0)`, which FFG processing ignores; every other vote satisfies
/// `ffg_source.epoch < ffg_target.epoch`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vote {
    pub validator: ValidatorId,
    pub slot: Slot,
    pub head: BlockId,
    pub ffg_source: Checkpoint,
    pub ffg_target: Checkpoint,
}

impl Vote {
    pub fn link(&self) -> FfgLink {
        FfgLink {
            source: self.ffg_source,
            target: self.ffg_target,
        }
    }

    /// Whether the FFG part can contribute to justification.
    pub fn has_ffg_link(&self) -> bool {
        self.ffg_source.epoch < self.ffg_target.epoch
    }
}

/// Anything gossiped between participants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Message {
    Block(Block),
    Vote(Vote),
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Block(b) => write!(f, "block {} slot {}", b.id, b.slot),
            Message::Vote(v) => write!(f, "vote {} slot {} head {}", v.validator, v.slot, v.head),
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::gasper::{
    epoch_boundary_block, ghost_head, Block, BlockId, ChainView, Checkpoint, Message, Origin,
    Slot, TieBreak, ValidatorId, Vote,
};
use crate::params::ProtocolParams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttestationTiming {
    /// Vote Δ after the slot start.
    #[default]
    GasperHalfway,
    /// Vote on receiving the slot's proposal, or a third into the slot at the latest.
    Eth2OneThird,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HonestConfig {
    #[serde(default)]
    pub attestation_timing: AttestationTiming,
    #[serde(default)]
    pub tiebreak: TieBreak,
}

impl HonestConfig {
    /// Offset into the slot of the attestation deadline.
    pub fn attest_offset_ms(&self, params: &ProtocolParams) -> u64 {
        match self.attestation_timing {
            AttestationTiming::GasperHalfway => params.delta_ms(),
            AttestationTiming::Eth2OneThird => params.slot_duration_ms / 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// `block_id` is the identifier the new block will carry.
    Proposer { validator: ValidatorId, block_id: BlockId, origin: Origin },
    Attester { validator: ValidatorId },
}

/// FFG source and target for a vote on `head` in `slot`.
///
/// The target is `head`'s boundary block for the slot's epoch; the source is
/// the highest justified checkpoint of an earlier epoch on that chain. Votes
/// of epoch 0 carry the genesis self-link.
pub fn ffg_checkpoints(
    view: &ChainView,
    head: BlockId,
    slot: Slot,
    params: &ProtocolParams,
) -> (Checkpoint, Checkpoint) {
    let epoch = params.epoch_of(slot);
    let target = Checkpoint {
        epoch,
        block: epoch_boundary_block(view, head, epoch, params.slots_per_epoch),
    };
    if epoch.0 == 0 {
        return (Checkpoint::genesis(), Checkpoint::genesis());
    }
    let source = view
        .justified_checkpoints()
        .iter()
        .rev()
        .filter(|c| c.epoch < epoch)
        .find(|c| view.is_ancestor(c.block, target.block))
        .copied()
        .unwrap_or(Checkpoint::genesis());
    (source, target)
}

pub fn make_vote(
    view: &ChainView,
    validator: ValidatorId,
    slot: Slot,
    head: BlockId,
    params: &ProtocolParams,
) -> Vote {
    let (ffg_source, ffg_target) = ffg_checkpoints(view, head, slot, params);
    Vote {
        validator,
        slot,
        head,
        ffg_source,
        ffg_target,
    }
}

/// Honest protocol action for `role` in `slot`: a proposer extends its
/// fork-choice head, an attester votes for it.
pub fn honest_step(
    view: &ChainView,
    role: Role,
    slot: Slot,
    params: &ProtocolParams,
    config: &HonestConfig,
) -> Vec<Message> {
    let head = ghost_head(view, slot, config.tiebreak);
    match role {
        Role::Proposer {
            validator,
            block_id,
            origin,
        } => vec![Message::Block(Block {
            id: block_id,
            parent: Some(head),
            slot,
            proposer: Some(validator),
            origin,
        })],
        Role::Attester { validator } => {
            vec![Message::Vote(make_vote(view, validator, slot, head, params))]
        }
    }
}

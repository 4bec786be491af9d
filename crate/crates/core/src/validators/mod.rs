//! Role assignment, honest behaviour and adversary strategies.

mod balancing;
mod combined;
mod honest;
mod refined;
mod roles;

use serde::{Deserialize, Serialize};

pub use balancing::Balancing;
pub use combined::Combined;
pub use honest::{ffg_checkpoints, honest_step, make_vote, AttestationTiming, HonestConfig, Role};
pub use refined::RefinedReorg;
pub use roles::{assign_roles, RoleSchedule};

use crate::engine::AdversaryCtx;
use crate::error::{Error, Result};
use crate::gasper::{Block, BlockId, Slot};

/// Which validators the adversary controls.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySelection {
    #[default]
    None,
    /// `round(beta * N)` validators drawn uniformly.
    Fraction,
    /// The proposer of `attack_slot`, and committee members of slot
    /// `attack_slot + j` taken in committee order until `per_slot[j]` of
    /// them are adversarial. The proposer is counted if it is a member.
    Placed { attack_slot: u64, per_slot: Vec<u32> },
}

/// Outcome summary a strategy reports at the end of a run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub attack_slot: Option<u64>,
    /// `Some` once the attack was attempted and evaluated.
    pub success: Option<bool>,
    pub reorg_length: u64,
    /// Slot at which a balancing attack lost the tie.
    pub lost_at: Option<u64>,
    pub private_blocks: Vec<BlockId>,
    pub note: Option<String>,
}

/// Adversary behaviour plugged into the simulation.
///
/// Hooks run at the simulated time of their trigger. All adversary actions go
/// through the [`AdversaryCtx`], which enforces the adversary's powers.
pub trait Strategy: Send {
    fn name(&self) -> &'static str;

    /// Redraw epoch-0 roles until the first two proposers are adversarial.
    fn wants_opportune_epoch(&self) -> bool {
        false
    }

    fn on_start(&mut self, _ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        Ok(())
    }

    /// Runs at the start of `slot` before the honest proposer acts.
    fn on_slot_start(&mut self, _slot: Slot, _ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        Ok(())
    }

    /// Runs once `slot` is over, before [`Strategy::on_slot_start`] of the next slot.
    fn on_slot_end(&mut self, _slot: Slot, _ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        Ok(())
    }

    /// The adversary's observer node received an honest proposal.
    fn on_honest_proposal(&mut self, _block: &Block, _ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        Ok(())
    }

    fn on_timer(&mut self, _tag: u64, _ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        Ok(())
    }

    fn report(&self) -> StrategyReport;
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    #[default]
    None,
    RefinedReorg {
        k: u64,
    },
    Balancing {
        t_delay_ms: u64,
    },
    /// Targeted delivery is used when the run grants adversarial delay.
    Combined {
        k: u64,
        t_delay_ms: u64,
        #[serde(default = "unlimited")]
        rebalance_budget_per_slot: u64,
    },
}

fn unlimited() -> u64 {
    u64::MAX
}

impl StrategyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyConfig::None => "none",
            StrategyConfig::RefinedReorg { .. } => "refined_reorg",
            StrategyConfig::Balancing { .. } => "balancing",
            StrategyConfig::Combined { .. } => "combined",
        }
    }

    pub fn k(&self) -> Option<u64> {
        match self {
            StrategyConfig::RefinedReorg { k } | StrategyConfig::Combined { k, .. } => Some(*k),
            _ => None,
        }
    }

    pub fn t_delay_ms(&self) -> Option<u64> {
        match self {
            StrategyConfig::Balancing { t_delay_ms } | StrategyConfig::Combined { t_delay_ms, .. } => {
                Some(*t_delay_ms)
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(0) = self.k() {
            return Err(Error::config("strategy.k", "must be at least 1"));
        }
        Ok(())
    }

    pub fn build(&self) -> Option<Box<dyn Strategy>> {
        match *self {
            StrategyConfig::None => None,
            StrategyConfig::RefinedReorg { k } => Some(Box::new(RefinedReorg::new(k))),
            StrategyConfig::Balancing { t_delay_ms } => Some(Box::new(Balancing::new(t_delay_ms))),
            StrategyConfig::Combined {
                k,
                t_delay_ms,
                rebalance_budget_per_slot,
            } => Some(Box::new(Combined::new(k, t_delay_ms, rebalance_budget_per_slot))),
        }
    }
}

/// Whether the public fork choice at slot `a + k + 1` runs through `private`
/// and skips every block of slots `a + 1 ..= a + k`.
fn reorg_succeeded(ctx: &AdversaryCtx<'_>, private: BlockId, a: u64, k: u64) -> bool {
    let view = ctx.public_view();
    let head = crate::gasper::ghost_head(view, Slot(a + k + 1), ctx.tiebreak());
    let mut on_private = false;
    for b in view.ancestors(head) {
        if b.id == private {
            on_private = true;
        }
        let slot = b.slot.0;
        if slot > a && slot <= a + k {
            return false;
        }
    }
    on_private
}

/// Which of two competing subtrees `head` lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    First,
    Second,
    Neither,
}

fn side_of(view: &crate::gasper::ChainView, roots: (BlockId, BlockId), head: BlockId) -> Side {
    if view.is_ancestor(roots.0, head) {
        Side::First
    } else if view.is_ancestor(roots.1, head) {
        Side::Second
    } else {
        Side::Neither
    }
}

fn split_of(
    ctx: &AdversaryCtx<'_>,
    slot: Slot,
    favored: BlockId,
    disfavored: BlockId,
) -> crate::engine::SlotSplit {
    let mut split = crate::engine::SlotSplit {
        slot: slot.0,
        favored: 0,
        disfavored: 0,
        other: 0,
    };
    for v in ctx.honest_votes(slot) {
        match side_of(ctx.view(), (favored, disfavored), v.head) {
            Side::First => split.favored += 1,
            Side::Second => split.disfavored += 1,
            Side::Neither => split.other += 1,
        }
    }
    split
}

/// Tally change from a new vote by `v` of `slot` for `side`, given the
/// fork-choice state at `current`. `None` if the vote would not become the
/// validator's latest message.
fn vote_effect(
    view: &crate::gasper::ChainView,
    roots: (BlockId, BlockId),
    v: crate::gasper::ValidatorId,
    slot: Slot,
    current: Slot,
    side: Side,
) -> Option<i64> {
    let old = view.latest_before(v, current);
    if old.is_some_and(|o| o.slot >= slot) {
        return None;
    }
    let old_side = old.map_or(Side::Neither, |o| side_of(view, roots, o.head));
    let gain = |s: Side| match s {
        Side::First => 1,
        Side::Second => -1,
        Side::Neither => 0,
    };
    Some(gain(side) - gain(old_side))
}

/// Claimed committee seats whose votes are still unused, oldest first.
#[derive(Debug, Default)]
struct VotePool {
    entries: Vec<(crate::gasper::ValidatorId, Slot)>,
}

impl VotePool {
    fn add(&mut self, v: crate::gasper::ValidatorId, slot: Slot) {
        self.entries.push((v, slot));
    }

    /// Remove and return the newest seat whose vote for `side` shifts the
    /// tally at `current` by exactly `effect` (first minus second subtree).
    /// Only seats of slots in `slots` are considered; seats that can no longer
    /// produce a latest message are dropped.
    fn take(
        &mut self,
        view: &crate::gasper::ChainView,
        roots: (BlockId, BlockId),
        current: Slot,
        slots: std::ops::Range<u64>,
        side: Side,
        effect: i64,
    ) -> Option<(crate::gasper::ValidatorId, Slot)> {
        let mut stale = Vec::new();
        let mut found = None;
        for (i, &(v, slot)) in self.entries.iter().enumerate().rev() {
            if !slots.contains(&slot.0) {
                continue;
            }
            match vote_effect(view, roots, v, slot, current, side) {
                None => stale.push(i),
                Some(e) if e == effect => {
                    found = Some(i);
                    break;
                }
                Some(_) => {}
            }
        }
        let picked = found.map(|i| {
            stale.push(i);
            self.entries[i]
        });
        stale.sort_unstable();
        for i in stale.into_iter().rev() {
            self.entries.remove(i);
        }
        picked
    }
}

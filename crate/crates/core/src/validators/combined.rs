use std::collections::BTreeMap;

use super::{reorg_succeeded, split_of, AdversarySelection, Side, Strategy, StrategyReport, VotePool};
use crate::engine::{AdversaryCtx, SimTime};
use crate::error::Result;
use crate::gasper::{ghost_head, Block, BlockId, Message, Slot, ValidatorId, Vote};

/// Timer tags at or above this value rebalance slot `tag - REBALANCE`.
const REBALANCE: u64 = 1 << 40;

/// Ex-ante reorg of `k` blocks where the middle slots are kept balanced.
///
/// The withheld block `P` of slot `a` competes with the honest branch rooted
/// at the proposal of slot `a + 1`. In each middle slot the adversary makes
/// part of the committee vote for `P` so that the honest branch leads by one
/// vote afterwards; on the final slot's proposal it releases enough votes for
/// `P` to win.
///
/// With adversarial delay powers the split is exact: a chosen subset of the
/// committee gets the swaying votes instantly and everyone else after Δ.
/// Otherwise swaying votes go out `t_delay_ms` before the attestation deadline
/// through the ordinary network, and up to `rebalance_budget_per_slot`
/// withheld votes restore the one-vote lead once the slot's votes are in,
/// early enough to reach the next proposer.
#[derive(Debug)]
pub struct Combined {
    k: u64,
    t_delay_ms: u64,
    rebalance_budget_per_slot: u64,
    attack: Option<u64>,
    private: Option<BlockId>,
    private_released: bool,
    final_released: bool,
    targeted: bool,
    pool: VotePool,
    report: StrategyReport,
}

impl Combined {
    pub fn new(k: u64, t_delay_ms: u64, rebalance_budget_per_slot: u64) -> Self {
        Self {
            k,
            t_delay_ms,
            rebalance_budget_per_slot,
            attack: None,
            private: None,
            private_released: false,
            final_released: false,
            targeted: false,
            pool: VotePool::default(),
            report: StrategyReport::default(),
        }
    }

    fn honest_root(&self, ctx: &AdversaryCtx<'_>, a: u64) -> Option<BlockId> {
        let view = ctx.view();
        let p = view.block(self.private?)?;
        let parent = p.parent?;
        view.children(parent)
            .iter()
            .copied()
            .filter(|&c| c != p.id)
            .find(|&c| view.block(c).is_some_and(|b| b.slot.0 == a + 1))
    }

    /// `(P, honest root)` and the tally `A - H` for fork choice at `current`.
    fn gap(&self, ctx: &AdversaryCtx<'_>, a: u64, current: Slot) -> ((BlockId, BlockId), i64) {
        let p = self.private.expect("private block exists");
        let root = self.honest_root(ctx, a);
        let w = ctx.weights(current);
        let weight = |b: Option<BlockId>| b.and_then(|b| w.get(&b).copied()).unwrap_or(0) as i64;
        // A placeholder root equal to P never matches the honest side.
        ((p, root.unwrap_or(p)), weight(Some(p)) - weight(root))
    }

    /// Cast pooled votes for `side` until the tally moves by `need` (in that
    /// side's favour), using at most `max_votes`. Overshoots only when
    /// `exact` is false.
    #[allow(clippy::too_many_arguments)]
    fn cast(
        &mut self,
        ctx: &mut AdversaryCtx<'_>,
        roots: (BlockId, BlockId),
        current: Slot,
        side: Side,
        mut need: i64,
        max_votes: u64,
        exact: bool,
    ) -> Result<(Vec<Vote>, i64)> {
        let a = self.attack.expect("attack slot");
        let sign = if side == Side::First { 1 } else { -1 };
        // Votes for the honest branch must not predate its root.
        let lo = if side == Side::First { a } else { a + 1 };
        let mut votes = Vec::new();
        let mut moved = 0;
        while need > 0 && (votes.len() as u64) < max_votes {
            let mut order = vec![if need >= 2 { 2 } else { 1 }];
            order.push(3 - order[0]);
            if exact && need < 2 {
                order.truncate(1);
            }
            let picked = order.into_iter().find_map(|e| {
                self.pool
                    .take(ctx.view(), roots, current, lo..current.0, side, sign * e)
                    .map(|seat| (seat, e))
            });
            let Some(((v, slot), e)) = picked else { break };
            let head = if side == Side::First { roots.0 } else { roots.1 };
            votes.push(ctx.vote(v, slot, head)?);
            need -= e;
            moved += e;
        }
        Ok((votes, moved))
    }

    fn bundle(&mut self, ctx: &AdversaryCtx<'_>, votes: Vec<Vote>) -> Vec<Message> {
        let mut msgs = Vec::with_capacity(votes.len() + 1);
        if !self.private_released {
            let p = self.private.expect("private block exists");
            msgs.push(Message::Block(ctx.view().block(p).cloned().expect("known")));
            self.private_released = true;
        }
        msgs.extend(votes.into_iter().map(Message::Vote));
        msgs
    }

    fn sway(&mut self, slot: Slot, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        let a = self.attack.expect("attack slot");
        let (roots, gap) = self.gap(ctx, a, slot);
        // Lead of the honest branch; ties are planned as lost.
        let m0 = -gap;
        if !self.targeted {
            let (votes, _) = self.cast(ctx, roots, slot, Side::First, m0 + 1, u64::MAX, false)?;
            let msgs = self.bundle(ctx, votes);
            ctx.log(|| format!("sway {} msgs", msgs.len()));
            return ctx.broadcast(msgs);
        }
        let honest: Vec<ValidatorId> = {
            let mut c = ctx.committee(slot);
            c.retain(|v| !ctx.is_adversarial(*v));
            c.sort_unstable();
            c
        };
        let w_h = honest.len() as i64;
        // After the slot the honest branch leads by w_h - g - 2|S|; aim for one.
        let g = if (w_h - 1 - 1) % 2 == 0 { 1 } else { 2 };
        let (votes, moved) = self.cast(ctx, roots, slot, Side::First, m0 + g, u64::MAX, true)?;
        let achieved = moved - m0;
        let recipients = ((w_h - achieved - 1) / 2).clamp(0, w_h) as usize;
        let delays: BTreeMap<ValidatorId, u64> = honest[..recipients].iter().map(|&v| (v, 0)).collect();
        let msgs = self.bundle(ctx, votes);
        let delta = ctx.params().delta_ms();
        ctx.log(|| format!("targeted sway {} msgs to {recipients} validators", msgs.len()));
        ctx.send_targeted(msgs, delays, delta)
    }

    fn rebalance(&mut self, slot: Slot, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        let a = self.attack.expect("attack slot");
        let next = Slot(slot.0 + 1);
        let (roots, gap) = self.gap(ctx, a, next);
        // Target: honest branch ahead by exactly one.
        let target = -1;
        let (side, need) = if gap > target {
            (Side::Second, gap - target)
        } else {
            (Side::First, target - gap)
        };
        if need == 0 || roots.0 == roots.1 {
            return Ok(());
        }
        let budget = self.rebalance_budget_per_slot;
        let (votes, _) = self.cast(ctx, roots, next, side, need, budget, true)?;
        if votes.is_empty() {
            return Ok(());
        }
        let msgs = self.bundle(ctx, votes);
        ctx.broadcast(msgs)
    }
}

impl Strategy for Combined {
    fn name(&self) -> &'static str {
        "combined"
    }

    fn on_start(&mut self, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        self.targeted = ctx.adversarial_delay();
        let horizon = ctx.horizon();
        let candidates: Vec<u64> = match ctx.selection() {
            AdversarySelection::Placed { attack_slot, .. } => vec![*attack_slot],
            _ => (1..horizon.saturating_sub(self.k + 1)).collect(),
        };
        for a in candidates {
            if a == 0 || a + self.k + 1 >= horizon {
                continue;
            }
            let proposer = ctx.proposer(Slot(a));
            if !ctx.is_adversarial(proposer) || ctx.adversarial_members(Slot(a)).is_empty() {
                continue;
            }
            ctx.claim_proposal(Slot(a))?;
            for j in a..a + self.k {
                for v in ctx.claim_votes(Slot(j)) {
                    self.pool.add(v, Slot(j));
                }
            }
            self.attack = Some(a);
            self.report.attack_slot = Some(a);
            return Ok(());
        }
        self.report.note = Some("no attack opportunity".to_string());
        Ok(())
    }

    fn on_slot_start(&mut self, slot: Slot, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        let Some(a) = self.attack else { return Ok(()) };
        let s = slot.0;
        if s == a {
            let parent = ghost_head(ctx.view(), slot, ctx.tiebreak());
            let p = ctx.propose(parent, slot)?;
            self.private = Some(p);
            self.report.private_blocks.push(p);
        }
        if s > a && s < a + self.k {
            let deadline = ctx.attest_time(slot);
            let at = if self.targeted {
                deadline.saturating_minus(1)
            } else {
                deadline.saturating_minus(self.t_delay_ms)
            };
            ctx.set_timer(at.max(ctx.now()), s)?;
            if !self.targeted {
                let next = ctx.slot_start(Slot(s + 1)).0;
                let mid = deadline.0 + (next - deadline.0) / 2;
                ctx.set_timer(SimTime(mid), REBALANCE + s)?;
            }
        }
        if s == a + self.k + 1 {
            let p = self.private.expect("private block exists");
            let success = self.final_released && reorg_succeeded(ctx, p, a, self.k);
            self.report.success = Some(success);
            self.report.reorg_length = if success { self.k } else { 0 };
        }
        Ok(())
    }

    fn on_timer(&mut self, tag: u64, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        match tag.checked_sub(REBALANCE) {
            Some(s) => self.rebalance(Slot(s), ctx),
            None => self.sway(Slot(tag), ctx),
        }
    }

    fn on_slot_end(&mut self, slot: Slot, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        let Some(a) = self.attack else { return Ok(()) };
        let s = slot.0;
        if s <= a || s > a + self.k {
            return Ok(());
        }
        if let (Some(p), Some(root)) = (self.private, self.honest_root(ctx, a)) {
            let split = split_of(ctx, slot, root, p);
            ctx.record_split(split);
        }
        Ok(())
    }

    fn on_honest_proposal(&mut self, block: &Block, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        let Some(a) = self.attack else { return Ok(()) };
        if self.final_released || block.slot.0 != a + self.k {
            return Ok(());
        }
        let (roots, gap) = self.gap(ctx, a, block.slot);
        let (votes, _) = self.cast(ctx, roots, block.slot, Side::First, 1 - gap, u64::MAX, false)?;
        let msgs = self.bundle(ctx, votes);
        self.final_released = true;
        ctx.log(|| format!("final release {} msgs", msgs.len()));
        if self.targeted {
            ctx.send_targeted(msgs, BTreeMap::new(), 0)
        } else {
            ctx.broadcast(msgs)
        }
    }

    fn report(&self) -> StrategyReport {
        self.report.clone()
    }
}

use super::{split_of, Side, Strategy, StrategyReport, VotePool};
use crate::engine::AdversaryCtx;
use crate::error::Result;
use crate::gasper::{BlockId, Message, Slot, ValidatorId, GENESIS};

const RELEASE: u64 = 0;
const SWAY: u64 = 1;

/// Keeps honest validators split between two sibling branches by delivering
/// a swaying vote `t_delay_ms` before the attestation deadline and restoring
/// an exact tie with withheld votes after every slot.
#[derive(Debug)]
pub struct Balancing {
    t_delay_ms: u64,
    left: Option<BlockId>,
    right: Option<BlockId>,
    pool: VotePool,
    active: bool,
    report: StrategyReport,
}

impl Balancing {
    pub fn new(t_delay_ms: u64) -> Self {
        Self {
            t_delay_ms,
            left: None,
            right: None,
            pool: VotePool::default(),
            active: false,
            report: StrategyReport::default(),
        }
    }

    fn roots(&self) -> (BlockId, BlockId) {
        (self.left.expect("left"), self.right.expect("right"))
    }

    /// Take the newest pooled vote that moves the tally at `current` by `want`.
    fn take(&mut self, ctx: &AdversaryCtx<'_>, current: Slot, want: i64) -> Option<(ValidatorId, Slot, Side)> {
        let side = if want > 0 { Side::First } else { Side::Second };
        self.pool
            .take(ctx.view(), self.roots(), current, 0..current.0, side, want)
            .map(|(v, slot)| (v, slot, side))
    }

    fn lose(&mut self, slot: Slot, ctx: &mut AdversaryCtx<'_>) {
        self.active = false;
        self.report.lost_at = Some(slot.0);
        ctx.release_claims(Slot(slot.0 + 1));
        ctx.log(|| format!("balance lost after slot {slot}"));
    }
}

impl Strategy for Balancing {
    fn name(&self) -> &'static str {
        "balancing"
    }

    fn wants_opportune_epoch(&self) -> bool {
        true
    }

    fn on_start(&mut self, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        if ctx.horizon() < 2 {
            self.report.note = Some("horizon shorter than two slots".to_string());
            return Ok(());
        }
        ctx.claim_proposal(Slot(0))?;
        ctx.claim_proposal(Slot(1))?;
        self.active = true;
        self.report.attack_slot = Some(0);
        Ok(())
    }

    fn on_slot_start(&mut self, slot: Slot, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        if !self.active {
            return Ok(());
        }
        match slot.0 {
            0 => {
                let b = ctx.propose(GENESIS, slot)?;
                self.left = Some(b);
                self.report.private_blocks.push(b);
            }
            1 => {
                let b = ctx.propose(GENESIS, slot)?;
                self.right = Some(b);
                self.report.private_blocks.push(b);
                // Released once slot 1's committee has voted.
                ctx.set_timer(ctx.attest_time(slot).plus(1), RELEASE)?;
            }
            s => {
                let at = ctx.attest_time(slot).saturating_minus(self.t_delay_ms).max(ctx.now());
                ctx.set_timer(at, SWAY + s)?;
            }
        }
        if slot.0 >= 1 {
            for v in ctx.claim_votes(slot) {
                self.pool.add(v, slot);
            }
        }
        Ok(())
    }

    fn on_timer(&mut self, tag: u64, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        if !self.active {
            return Ok(());
        }
        if tag == RELEASE {
            let (l, r) = self.roots();
            let blocks = [l, r].map(|b| Message::Block(ctx.view().block(b).cloned().expect("known")));
            return ctx.broadcast(blocks.to_vec());
        }
        let slot = Slot(tag - SWAY);
        let (l, r) = self.roots();
        let favored = ctx.tiebreak().prefer(l, r);
        let want = if favored == l { -1 } else { 1 };
        let Some((v, vslot, side)) = self.take(ctx, slot, want) else {
            return Ok(());
        };
        let head = if side == Side::First { l } else { r };
        let vote = ctx.vote(v, vslot, head)?;
        ctx.log(|| format!("sway vote {v} for {head}"));
        ctx.broadcast(vec![Message::Vote(vote)])
    }

    fn on_slot_end(&mut self, slot: Slot, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        if !self.active || slot.0 < 1 {
            return Ok(());
        }
        let (l, r) = self.roots();
        if slot.0 >= 2 {
            let favored = ctx.tiebreak().prefer(l, r);
            let disfavored = if favored == l { r } else { l };
            let split = split_of(ctx, slot, favored, disfavored);
            ctx.record_split(split);
        }
        let next = Slot(slot.0 + 1);
        let weights = ctx.weights(next);
        let mut diff = weights.get(&l).copied().unwrap_or(0) as i64 - weights.get(&r).copied().unwrap_or(0) as i64;
        let mut votes = Vec::new();
        while diff != 0 {
            let sign = -diff.signum();
            let mut want = if diff.abs() >= 2 { 2 * sign } else { sign };
            let mut picked = self.take(ctx, next, want);
            if picked.is_none() && want != sign {
                want = sign;
                picked = self.take(ctx, next, want);
            }
            let Some((v, vslot, side)) = picked else {
                break;
            };
            let head = if side == Side::First { l } else { r };
            votes.push(ctx.vote(v, vslot, head)?);
            diff += want;
        }
        if !votes.is_empty() {
            ctx.broadcast(votes.into_iter().map(Message::Vote).collect())?;
        }
        if diff != 0 {
            self.lose(slot, ctx);
        }
        Ok(())
    }

    fn report(&self) -> StrategyReport {
        self.report.clone()
    }
}

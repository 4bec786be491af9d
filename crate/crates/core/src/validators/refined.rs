use std::collections::BTreeMap;

use super::{reorg_succeeded, AdversarySelection, Strategy, StrategyReport};
use crate::engine::AdversaryCtx;
use crate::error::Result;
use crate::gasper::{ghost_head, Block, BlockId, Message, Slot, Vote};

/// Ex-ante reorg of the `k` honest blocks following a withheld adversarial block.
///
/// The adversary proposes `P` privately in slot `a`, has its committee
/// members of slots `a..a+k` vote for `P`, and releases everything as soon as
/// it sees the honest proposal of slot `a + k`.
#[derive(Debug)]
pub struct RefinedReorg {
    k: u64,
    attack: Option<u64>,
    private: Option<BlockId>,
    votes: Vec<Vote>,
    released: bool,
    report: StrategyReport,
}

impl RefinedReorg {
    pub fn new(k: u64) -> Self {
        Self {
            k,
            attack: None,
            private: None,
            votes: Vec::new(),
            released: false,
            report: StrategyReport::default(),
        }
    }

    /// Adversarial votes available against the honest votes to overcome.
    fn budget(&self, a: u64, ctx: &mut AdversaryCtx<'_>) -> (u64, u64) {
        let mut have = 0;
        let mut need = 1;
        for j in a..a + self.k {
            let adv = ctx.adversarial_members(Slot(j)).len() as u64;
            have += adv;
            if j > a {
                need += ctx.committee(Slot(j)).len() as u64 - adv;
            }
        }
        (have, need)
    }
}

impl Strategy for RefinedReorg {
    fn name(&self) -> &'static str {
        "refined_reorg"
    }

    fn on_start(&mut self, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        let horizon = ctx.horizon();
        let last = horizon.saturating_sub(self.k + 2);
        let placed = match ctx.selection() {
            AdversarySelection::Placed { attack_slot, .. } => Some(*attack_slot),
            _ => None,
        };
        let candidates: Vec<u64> = match placed {
            Some(a) => vec![a],
            None => (1..=last).collect(),
        };
        for a in candidates {
            if a + self.k + 1 >= horizon || a == 0 {
                self.report.note = Some(format!("attack slot {a} leaves no room before the horizon"));
                continue;
            }
            let proposer = ctx.proposer(Slot(a));
            if !ctx.is_adversarial(proposer) {
                continue;
            }
            let (have, need) = self.budget(a, ctx);
            if have < need {
                if placed.is_some() {
                    self.report.attack_slot = Some(a);
                    self.report.success = Some(false);
                    self.report.note = Some(format!("budget {have} below required {need}"));
                }
                continue;
            }
            ctx.claim_proposal(Slot(a))?;
            for j in a..a + self.k {
                ctx.claim_votes(Slot(j));
            }
            self.attack = Some(a);
            self.report.attack_slot = Some(a);
            self.report.note = None;
            return Ok(());
        }
        if self.report.note.is_none() {
            self.report.note = Some("no attack opportunity".to_string());
        }
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
        if (a..a + self.k).contains(&s) {
            let p = self.private.expect("private block exists");
            for v in ctx.adversarial_members(slot) {
                self.votes.push(ctx.vote(v, slot, p)?);
            }
        }
        if s == a + self.k + 1 {
            let p = self.private.expect("private block exists");
            let success = self.released && reorg_succeeded(ctx, p, a, self.k);
            self.report.success = Some(success);
            self.report.reorg_length = if success { self.k } else { 0 };
        }
        Ok(())
    }

    fn on_honest_proposal(&mut self, block: &Block, ctx: &mut AdversaryCtx<'_>) -> Result<()> {
        let Some(a) = self.attack else { return Ok(()) };
        if self.released || block.slot.0 != a + self.k {
            return Ok(());
        }
        let p = self.private.expect("private block exists");
        let mut msgs = vec![Message::Block(ctx.view().block(p).cloned().expect("known"))];
        msgs.extend(self.votes.iter().cloned().map(Message::Vote));
        self.released = true;
        ctx.log(|| format!("release {p} with {} votes", msgs.len() - 1));
        if ctx.adversarial_delay() {
            ctx.send_targeted(msgs, BTreeMap::new(), 0)
        } else {
            ctx.broadcast(msgs)
        }
    }

    fn report(&self) -> StrategyReport {
        self.report.clone()
    }
}

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::aggregates::Aggregates;
use super::{EventKind, EventQueue, Recipient, SeededRandom, SimTime};
use crate::error::{Error, Result};
use crate::gasper::{
    detect_slashing, filter_valid_votes, ghost_head, subtree_weights, Block, BlockId, ChainView,
    Checkpoint, Epoch, Message, Origin, Slot, TieBreak, ValidatorId, Vote, GENESIS,
};
use crate::net::DelayModel;
use crate::params::ProtocolParams;
use crate::validators::{
    assign_roles, ffg_checkpoints, AdversarySelection, AttestationTiming, HonestConfig,
    RoleSchedule, Strategy, StrategyReport,
};

const DOMAIN_ROLES: u64 = 1;
const DOMAIN_ADVERSARY: u64 = 2;
const DOMAIN_NETWORK: u64 = 3;
const MAX_OPPORTUNE_DRAWS: u64 = 100_000;

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub params: ProtocolParams,
    pub honest: HonestConfig,
    pub network: DelayModel,
    /// Whether the adversary may choose per-recipient delays.
    pub adversarial_delay: bool,
    /// Number of slots to simulate.
    pub horizon: u64,
    pub seed: u64,
    pub selection: AdversarySelection,
    pub verbose: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InFlightId(pub u64);

/// A broadcast not yet known to every participant.
#[derive(Debug)]
struct InFlight {
    id: InFlightId,
    msgs: Vec<Message>,
    /// From this time on every participant holds the messages.
    settle: SimTime,
    /// Earlier arrivals at participants that may act before `settle`.
    arrivals: HashMap<ValidatorId, SimTime>,
}

/// A vote produced under adversarial control.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub vote: Vote,
    pub created: SimTime,
    pub released: Option<SimTime>,
}

/// How one slot's honest votes divided between two competing branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSplit {
    pub slot: u64,
    pub favored: u32,
    pub disfavored: u32,
    pub other: u32,
}

/// Observations collected while a simulation runs.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunTrace {
    pub slots_run: u64,
    pub proposals: u64,
    pub honest_votes: u64,
    /// Head of the common view at each slot start.
    pub heads: Vec<BlockId>,
    /// `(slot, checkpoint)` whenever the common view's justified checkpoint moved.
    pub justified: Vec<(u64, Checkpoint)>,
    pub finalized: Vec<(u64, Checkpoint)>,
    /// `(completed epoch, epochs since the finalized checkpoint)`.
    pub epoch_lag: Vec<(Epoch, u64)>,
    pub splits: Vec<SlotSplit>,
    pub adv_votes_released: u64,
    /// Deconfirmed vote aggregates at each slot start.
    pub aggregate_backlog: Vec<u64>,
    pub expired_target_votes: u64,
    /// Epoch-0 role draws needed to obtain an opportune start.
    pub wait_epochs: u64,
    pub events: Vec<String>,
}

/// Everything a finished run leaves behind.
#[derive(Debug)]
pub struct SimOutcome {
    pub trace: RunTrace,
    pub report: Option<StrategyReport>,
    /// Common view once every message has been delivered.
    pub view: ChainView,
    pub blocks: Vec<Block>,
    pub public: Vec<bool>,
    pub adversarial: Vec<bool>,
    pub adversarial_votes: Vec<VoteRecord>,
}

impl SimOutcome {
    /// Fork-choice head of the final common view.
    pub fn final_head(&self, tiebreak: TieBreak) -> BlockId {
        let next = Slot(self.trace.slots_run);
        ghost_head(&self.view, next, tiebreak)
    }
}

enum Delivery {
    Network,
    Targeted(BTreeMap<ValidatorId, u64>, u64),
}

/// The simulated world: clock, participants' knowledge, network, adversary.
///
/// Every participant's view is the common view (messages that reached
/// everyone) plus the in-flight messages that reached it early. Delays are
/// only sampled for participants that can act before a broadcast settles.
pub struct Simulation {
    cfg: SimConfig,
    queue: EventQueue,
    base_rng: SeededRandom,
    net_rng: SeededRandom,
    role_offset: u64,
    roles: HashMap<u64, RoleSchedule>,
    adversarial: Vec<bool>,
    blocks: Vec<Block>,
    public: Vec<bool>,
    common: ChainView,
    adv_view: ChainView,
    in_flight: Vec<InFlight>,
    next_flight: u64,
    honest_votes: BTreeMap<u64, Vec<Vote>>,
    adv_votes: Vec<VoteRecord>,
    claimed_proposals: BTreeSet<u64>,
    claimed_votes: HashSet<(ValidatorId, u64)>,
    attested: HashMap<u64, HashSet<ValidatorId>>,
    attest_at: HashMap<(u64, ValidatorId), SimTime>,
    observer_inbox: HashMap<u64, Block>,
    aggregates: Aggregates,
    strategy: Option<Box<dyn Strategy>>,
    trace: RunTrace,
}

impl Simulation {
    pub fn new(cfg: SimConfig, strategy: Option<Box<dyn Strategy>>) -> Result<Self> {
        cfg.params.validate()?;
        let n = cfg.params.n_validators as usize;
        let base_rng = SeededRandom::new(cfg.seed);
        let net_rng = base_rng.fork(DOMAIN_NETWORK, 0);
        let mut sim = Simulation {
            common: ChainView::new(&cfg.params),
            adv_view: ChainView::new(&cfg.params),
            queue: EventQueue::new(),
            base_rng,
            net_rng,
            role_offset: 0,
            roles: HashMap::new(),
            adversarial: vec![false; n],
            blocks: vec![Block::genesis()],
            public: vec![true],
            in_flight: Vec::new(),
            next_flight: 0,
            honest_votes: BTreeMap::new(),
            adv_votes: Vec::new(),
            claimed_proposals: BTreeSet::new(),
            claimed_votes: HashSet::new(),
            attested: HashMap::new(),
            attest_at: HashMap::new(),
            observer_inbox: HashMap::new(),
            aggregates: Aggregates::default(),
            strategy,
            trace: RunTrace::default(),
            cfg,
        };
        sim.select_adversary()?;
        Ok(sim)
    }

    fn select_adversary(&mut self) -> Result<()> {
        let n = self.cfg.params.n_validators as usize;
        match self.cfg.selection.clone() {
            AdversarySelection::None => {}
            AdversarySelection::Fraction => {
                let count = self.cfg.params.n_adversarial() as usize;
                let mut rng = self.base_rng.fork(DOMAIN_ADVERSARY, 0);
                for i in index::sample(&mut rng, n, count) {
                    self.adversarial[i] = true;
                }
            }
            AdversarySelection::Placed {
                attack_slot,
                per_slot,
            } => {
                let w = self.cfg.params.committee_size as usize;
                let proposer = self.proposer(Slot(attack_slot));
                self.adversarial[proposer.0 as usize] = true;
                for (j, &count) in per_slot.iter().enumerate() {
                    if count as usize > w {
                        return Err(Error::config(
                            "adversary.per_slot",
                            format!("{count} exceeds committee size {w}"),
                        ));
                    }
                    // The proposer counts when it also sits on this committee.
                    let members = self.committee(Slot(attack_slot + j as u64));
                    let mut have = members.iter().filter(|v| self.adversarial[v.0 as usize]).count();
                    for v in &members {
                        if have >= count as usize {
                            break;
                        }
                        if !self.adversarial[v.0 as usize] {
                            self.adversarial[v.0 as usize] = true;
                            have += 1;
                        }
                    }
                }
            }
        }
        if self.strategy.as_ref().is_some_and(|s| s.wants_opportune_epoch()) {
            let draw = (0..MAX_OPPORTUNE_DRAWS)
                .find(|&d| {
                    let roles = assign_roles(
                        &self.cfg.params,
                        Epoch(0),
                        &mut self.base_rng.fork(DOMAIN_ROLES, d),
                    );
                    self.adversarial[roles.proposers[0].0 as usize]
                        && self.adversarial[roles.proposers[1].0 as usize]
                })
                .ok_or(Error::NoOpportuneEpoch(MAX_OPPORTUNE_DRAWS))?;
            self.role_offset = draw;
            self.roles.clear();
            self.trace.wait_epochs = draw + 1;
        }
        Ok(())
    }

    fn params(&self) -> &ProtocolParams {
        &self.cfg.params
    }

    fn schedule_for(&mut self, slot: Slot) -> &RoleSchedule {
        let epoch = self.cfg.params.epoch_of(slot);
        let params = &self.cfg.params;
        let rng = &self.base_rng;
        let offset = self.role_offset;
        self.roles.entry(epoch.0).or_insert_with(|| {
            assign_roles(params, epoch, &mut rng.fork(DOMAIN_ROLES, offset + epoch.0))
        })
    }

    fn proposer(&mut self, slot: Slot) -> ValidatorId {
        self.schedule_for(slot).proposer(slot)
    }

    fn committee(&mut self, slot: Slot) -> Vec<ValidatorId> {
        self.schedule_for(slot).committee(slot).to_vec()
    }

    fn slot_start(&self, slot: u64) -> SimTime {
        SimTime(slot * self.params().slot_duration_ms)
    }

    fn slot_at(&self, t: SimTime) -> u64 {
        t.0 / self.params().slot_duration_ms
    }

    fn log(&mut self, what: impl FnOnce() -> String) {
        if self.cfg.verbose {
            let now = self.queue.now();
            let slot = self.slot_at(now);
            let line = format!("t={now} slot={slot} {}", what());
            self.trace.events.push(line);
        }
    }

    /// Simulate all slots up to the configured horizon.
    pub fn run(mut self) -> Result<SimOutcome> {
        let horizon = self.cfg.horizon;
        self.with_strategy(|s, ctx| s.on_start(ctx))?;
        if horizon > 0 {
            self.queue.schedule(SimTime(0), EventKind::SlotStart(Slot(0)))?;
        }
        let end = self.slot_start(horizon);
        while let Some(ev) = self.queue.pop() {
            if ev.due >= end {
                break;
            }
            self.promote(ev.due);
            match ev.kind {
                EventKind::SlotStart(slot) => self.on_slot_start(slot)?,
                EventKind::AttestDue(slot) => self.on_attest_due(slot)?,
                EventKind::Deliver { msg, recipient } => self.on_deliver(msg as u64, recipient)?,
                EventKind::AdversaryTimer(tag) => self.with_strategy(|s, ctx| s.on_timer(tag, ctx))?,
            }
        }
        if horizon > 0 {
            self.with_strategy(|s, ctx| s.on_slot_end(Slot(horizon - 1), ctx))?;
        }
        self.promote(SimTime(u64::MAX));
        self.trace.slots_run = horizon;
        if horizon > 0 && horizon.is_multiple_of(self.params().slots_per_epoch) {
            self.record_epoch_lag(horizon);
        }
        let tip = ghost_head(&self.common, Slot(horizon), self.cfg.honest.tiebreak);
        self.trace.expired_target_votes = self.aggregates.expired_votes(&self.blocks, tip, horizon);
        let report = self.strategy.as_ref().map(|s| s.report());
        Ok(SimOutcome {
            trace: self.trace,
            report,
            view: self.common,
            blocks: self.blocks,
            public: self.public,
            adversarial: self.adversarial,
            adversarial_votes: self.adv_votes,
        })
    }

    fn with_strategy(
        &mut self,
        f: impl FnOnce(&mut dyn Strategy, &mut AdversaryCtx<'_>) -> Result<()>,
    ) -> Result<()> {
        let Some(mut strategy) = self.strategy.take() else {
            return Ok(());
        };
        let out = f(strategy.as_mut(), &mut AdversaryCtx { sim: self });
        self.strategy = Some(strategy);
        out
    }

    /// Move every broadcast that has reached everyone by `t` into the common view.
    fn promote(&mut self, t: SimTime) {
        if !self.in_flight.iter().any(|f| f.settle <= t) {
            return;
        }
        let (mut done, rest): (Vec<InFlight>, Vec<InFlight>) =
            self.in_flight.drain(..).partition(|f| f.settle <= t);
        self.in_flight = rest;
        done.sort_by_key(|f| (f.settle, f.id));
        for f in done {
            for m in &f.msgs {
                self.common.apply(m);
            }
        }
    }

    /// In-flight broadcasts that reached `p` by `t`, in arrival order.
    fn received(&self, p: ValidatorId, t: SimTime) -> Vec<usize> {
        let mut got: Vec<(SimTime, InFlightId, usize)> = self
            .in_flight
            .iter()
            .enumerate()
            .filter_map(|(i, f)| {
                f.arrivals
                    .get(&p)
                    .filter(|&&a| a <= t)
                    .map(|&a| (a, f.id, i))
            })
            .collect();
        got.sort_unstable();
        got.into_iter().map(|(_, _, i)| i).collect()
    }

    fn eval_view<R>(&mut self, received: &[usize], f: impl FnOnce(&ChainView) -> R) -> R {
        if received.is_empty() {
            return f(&self.common);
        }
        let in_flight = &self.in_flight;
        let msgs = received.iter().flat_map(|&i| in_flight[i].msgs.iter());
        self.common.with_overlay(msgs, f)
    }

    fn record_epoch_lag(&mut self, slot: u64) {
        let completed = slot / self.params().slots_per_epoch - 1;
        let lag = completed - self.common.finalized().epoch.0;
        self.trace.epoch_lag.push((Epoch(completed), lag));
    }

    fn record_slot_metrics(&mut self, slot: u64) {
        let tiebreak = self.cfg.honest.tiebreak;
        let head = ghost_head(&self.common, Slot(slot), tiebreak);
        self.trace.heads.push(head);
        let justified = self.common.justified();
        if self.trace.justified.last().map_or(justified != Checkpoint::genesis(), |(_, c)| *c != justified) {
            self.trace.justified.push((slot, justified));
        }
        let finalized = self.common.finalized();
        if self.trace.finalized.last().map_or(finalized != Checkpoint::genesis(), |(_, c)| *c != finalized) {
            self.trace.finalized.push((slot, finalized));
        }
        if slot > 0 && slot.is_multiple_of(self.params().slots_per_epoch) {
            self.record_epoch_lag(slot);
        }
        let canonical: HashSet<BlockId> = self.common.ancestors(head).map(|b| b.id).collect();
        let backlog = self
            .aggregates
            .deconfirmed(&self.blocks, &self.public, &canonical, head, slot);
        self.trace.aggregate_backlog.push(backlog);
    }

    fn on_slot_start(&mut self, slot: Slot) -> Result<()> {
        let s = slot.0;
        self.log(|| "slot start".to_string());
        if s > 0 {
            self.with_strategy(|st, ctx| st.on_slot_end(Slot(s - 1), ctx))?;
        }
        self.record_slot_metrics(s);
        self.attested.retain(|&k, _| k + 2 > s);
        self.attest_at.retain(|&(k, _), _| k + 2 > s);
        self.with_strategy(|st, ctx| st.on_slot_start(slot, ctx))?;

        let now = self.queue.now();
        if !self.claimed_proposals.contains(&s) {
            let proposer = self.proposer(slot);
            let received = self.received(proposer, now);
            let tiebreak = self.cfg.honest.tiebreak;
            let parent = self.eval_view(&received, |v| ghost_head(v, slot, tiebreak));
            let origin = if self.adversarial[proposer.0 as usize] {
                Origin::Adversarial
            } else {
                Origin::Honest
            };
            let id = self.new_block(parent, slot, Some(proposer), origin);
            self.trace.proposals += 1;
            let block = self.blocks[id.0 as usize].clone();
            self.log(|| format!("propose {id} parent {parent} by {proposer}"));
            self.broadcast(vec![Message::Block(block)], Delivery::Network, true)?;
        }
        let offset = self.cfg.honest.attest_offset_ms(self.params());
        let due = self.slot_start(s).plus(offset);
        self.queue.schedule(due, EventKind::AttestDue(slot))?;
        if s + 1 < self.cfg.horizon {
            let next = self.slot_start(s + 1);
            self.queue.schedule(next, EventKind::SlotStart(Slot(s + 1)))?;
        }
        Ok(())
    }

    fn new_block(&mut self, parent: BlockId, slot: Slot, proposer: Option<ValidatorId>, origin: Origin) -> BlockId {
        let id = BlockId(self.blocks.len() as u32);
        let block = Block {
            id,
            parent: Some(parent),
            slot,
            proposer,
            origin,
        };
        self.blocks.push(block.clone());
        self.public.push(false);
        self.adv_view.insert_block(block);
        self.aggregates.fill_block(&self.blocks, id, parent, slot.0);
        id
    }

    fn on_attest_due(&mut self, slot: Slot) -> Result<()> {
        let committee = self.committee(slot);
        let done = self.attested.get(&slot.0);
        let pending: Vec<ValidatorId> = committee
            .into_iter()
            .filter(|v| !self.claimed_votes.contains(&(*v, slot.0)))
            .filter(|v| done.is_none_or(|d| !d.contains(v)))
            .collect();
        self.attest(slot, &pending)
    }

    fn on_deliver(&mut self, msg: u64, recipient: Recipient) -> Result<()> {
        match recipient {
            Recipient::Observer => {
                if let Some(block) = self.observer_inbox.remove(&msg) {
                    self.log(|| format!("observer receives {}", block.id));
                    self.with_strategy(|s, ctx| s.on_honest_proposal(&block, ctx))?;
                }
                Ok(())
            }
            Recipient::Validator(v) => {
                let slot = Slot(self.slot_at(self.queue.now()));
                let already = self.attested.get(&slot.0).is_some_and(|d| d.contains(&v));
                if already || self.claimed_votes.contains(&(v, slot.0)) {
                    return Ok(());
                }
                self.attest(slot, &[v])
            }
        }
    }

    /// Honest attestations of `voters` for `slot`, cast now.
    fn attest(&mut self, slot: Slot, voters: &[ValidatorId]) -> Result<()> {
        if voters.is_empty() {
            return Ok(());
        }
        let now = self.queue.now();
        let tiebreak = self.cfg.honest.tiebreak;
        let params = self.cfg.params.clone();
        let mut by_view: HashMap<Vec<usize>, (BlockId, Checkpoint, Checkpoint)> = HashMap::new();
        let mut votes = Vec::with_capacity(voters.len());
        for &v in voters {
            let received = self.received(v, now);
            let decision = match by_view.get(&received) {
                Some(d) => *d,
                None => {
                    let d = self.eval_view(&received, |view| {
                        let head = ghost_head(view, slot, tiebreak);
                        let (source, target) = ffg_checkpoints(view, head, slot, &params);
                        (head, source, target)
                    });
                    by_view.insert(received, d);
                    d
                }
            };
            let (head, ffg_source, ffg_target) = decision;
            votes.push(Vote {
                validator: v,
                slot,
                head,
                ffg_source,
                ffg_target,
            });
        }
        let committee = self.committee(slot);
        for vote in &votes {
            self.attested.entry(slot.0).or_default().insert(vote.validator);
            if let Some(pos) = committee.iter().position(|&c| c == vote.validator) {
                self.aggregates.add_vote(vote, pos);
            }
            self.honest_votes.entry(slot.0).or_default().push(vote.clone());
        }
        self.trace.honest_votes += votes.len() as u64;
        self.log(|| {
            let mut heads: BTreeMap<BlockId, usize> = BTreeMap::new();
            for v in &votes {
                *heads.entry(v.head).or_default() += 1;
            }
            format!("attest {} votes {heads:?}", votes.len())
        });
        let msgs: Vec<Message> = votes.into_iter().map(Message::Vote).collect();
        if self.focus(&msgs, now).is_empty() {
            self.broadcast(msgs, Delivery::Network, false)?;
        } else {
            for m in msgs {
                self.broadcast(vec![m], Delivery::Network, false)?;
            }
        }
        Ok(())
    }

    /// Honest participants that may act before a broadcast sent now settles.
    fn focus(&mut self, msgs: &[Message], now: SimTime) -> Vec<ValidatorId> {
        let delta = self.params().delta_ms();
        let end = now.plus(delta);
        let cur = self.slot_at(now);
        let vote_slot = match msgs {
            [Message::Vote(first), ..]
                if msgs
                    .iter()
                    .all(|m| matches!(m, Message::Vote(v) if v.slot == first.slot)) =>
            {
                Some(first.slot.0)
            }
            _ => None,
        };
        let timing = self.cfg.honest.attestation_timing;
        let third = self.params().slot_duration_ms / 3;
        let mut out = Vec::new();
        for s in [cur, cur + 1] {
            if s >= self.cfg.horizon {
                continue;
            }
            let start = self.slot_start(s);
            if start >= now && start < end && !self.claimed_proposals.contains(&s) {
                out.push(self.proposer(Slot(s)));
            }
            if vote_slot == Some(s) {
                continue;
            }
            let committee = self.committee(Slot(s));
            let done = self.attested.get(&s);
            for v in committee {
                if self.claimed_votes.contains(&(v, s)) || done.is_some_and(|d| d.contains(&v)) {
                    continue;
                }
                let acts = match (timing, self.attest_at.get(&(s, v))) {
                    (_, Some(&t)) => t >= now && t < end,
                    (AttestationTiming::GasperHalfway, None) => {
                        let t = start.plus(delta);
                        t >= now && t < end
                    }
                    (AttestationTiming::Eth2OneThird, None) => {
                        start < end && start.plus(third) >= now
                    }
                };
                if acts {
                    out.push(v);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn broadcast(&mut self, msgs: Vec<Message>, delivery: Delivery, honest_proposal: bool) -> Result<InFlightId> {
        let now = self.queue.now();
        let delta = self.params().delta_ms();
        if matches!(delivery, Delivery::Targeted(..)) && !self.cfg.adversarial_delay {
            return Err(Error::TargetedNotPermitted);
        }
        for m in &msgs {
            self.adv_view.apply(m);
            if let Message::Block(b) = m {
                self.public[b.id.0 as usize] = true;
            }
        }
        let focus = self.focus(&msgs, now);
        let observed = match (&msgs[..], honest_proposal) {
            ([Message::Block(b)], true) if self.strategy.is_some() => Some(b.clone()),
            _ => None,
        };

        let mut delays: Vec<u64> = match &delivery {
            Delivery::Network => {
                let mut ids: Vec<u32> = focus.iter().map(|v| v.0).collect();
                if observed.is_some() {
                    ids.push(self.params().n_validators);
                }
                self.cfg.network.sample_delays(&ids, &mut self.net_rng)?
            }
            Delivery::Targeted(schedule, default) => focus
                .iter()
                .map(|v| schedule.get(v).copied().unwrap_or(*default))
                .collect(),
        };
        for d in &mut delays {
            *d = (*d).min(delta);
        }
        let observer_delay = if observed.is_some() { delays.pop() } else { None };

        let id = InFlightId(self.next_flight);
        self.next_flight += 1;
        let arrivals: HashMap<ValidatorId, SimTime> = focus
            .iter()
            .zip(&delays)
            .map(|(&v, &d)| (v, now.plus(d)))
            .collect();
        let settle = now.plus(delays.iter().copied().max().unwrap_or(0));

        if let (Some(block), Some(d)) = (observed, observer_delay) {
            self.queue.schedule(
                now.plus(d),
                EventKind::Deliver {
                    msg: id.0 as usize,
                    recipient: Recipient::Observer,
                },
            )?;
            let slot = block.slot.0;
            let proposal_now = slot == self.slot_at(now);
            self.observer_inbox.insert(id.0, block);
            if proposal_now && self.cfg.honest.attestation_timing == AttestationTiming::Eth2OneThird {
                let deadline = self.slot_start(slot).plus(self.params().slot_duration_ms / 3);
                let committee: HashSet<ValidatorId> = self.committee(Slot(slot)).into_iter().collect();
                for &v in &focus {
                    let at = arrivals[&v];
                    if at <= deadline && committee.contains(&v) && !self.claimed_votes.contains(&(v, slot)) {
                        self.attest_at.insert((slot, v), at);
                        self.queue.schedule(
                            at,
                            EventKind::Deliver {
                                msg: id.0 as usize,
                                recipient: Recipient::Validator(v),
                            },
                        )?;
                    }
                }
            }
        }
        self.log(|| {
            let what: Vec<String> = msgs.iter().take(3).map(ToString::to_string).collect();
            format!(
                "broadcast {} msgs [{}{}] focus {} settle {settle}",
                msgs.len(),
                what.join("; "),
                if msgs.len() > 3 { "; ..." } else { "" },
                focus.len()
            )
        });
        self.in_flight.push(InFlight {
            id,
            msgs,
            settle,
            arrivals,
        });
        Ok(id)
    }
}

/// The adversary's handle on the world. Every action is checked against the
/// adversary's powers.
pub struct AdversaryCtx<'a> {
    sim: &'a mut Simulation,
}

impl AdversaryCtx<'_> {
    pub fn now(&self) -> SimTime {
        self.sim.queue.now()
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.sim.cfg.params
    }

    pub fn horizon(&self) -> u64 {
        self.sim.cfg.horizon
    }

    pub fn tiebreak(&self) -> TieBreak {
        self.sim.cfg.honest.tiebreak
    }

    pub fn adversarial_delay(&self) -> bool {
        self.sim.cfg.adversarial_delay
    }

    pub fn selection(&self) -> &AdversarySelection {
        &self.sim.cfg.selection
    }

    pub fn slot_start(&self, slot: Slot) -> SimTime {
        self.sim.slot_start(slot.0)
    }

    /// When honest committee members of `slot` vote at the latest.
    pub fn attest_time(&self, slot: Slot) -> SimTime {
        let offset = self.sim.cfg.honest.attest_offset_ms(self.params());
        self.sim.slot_start(slot.0).plus(offset)
    }

    pub fn proposer(&mut self, slot: Slot) -> ValidatorId {
        self.sim.proposer(slot)
    }

    pub fn committee(&mut self, slot: Slot) -> Vec<ValidatorId> {
        self.sim.committee(slot)
    }

    pub fn is_adversarial(&self, v: ValidatorId) -> bool {
        self.sim.adversarial[v.0 as usize]
    }

    pub fn adversarial_members(&mut self, slot: Slot) -> Vec<ValidatorId> {
        let committee = self.sim.committee(slot);
        committee.into_iter().filter(|v| self.is_adversarial(*v)).collect()
    }

    /// Take over the proposal of `slot`; honest behaviour is suppressed.
    pub fn claim_proposal(&mut self, slot: Slot) -> Result<()> {
        let p = self.sim.proposer(slot);
        if !self.is_adversarial(p) {
            return Err(Error::AdversaryRule(format!("proposer {p} of slot {slot} is honest")));
        }
        self.sim.claimed_proposals.insert(slot.0);
        Ok(())
    }

    /// Take over every adversarial member of `slot`'s committee.
    pub fn claim_votes(&mut self, slot: Slot) -> Vec<ValidatorId> {
        let members = self.adversarial_members(slot);
        for &v in &members {
            self.sim.claimed_votes.insert((v, slot.0));
        }
        members
    }

    /// Return control of all slots from `from` onwards to honest behaviour.
    pub fn release_claims(&mut self, from: Slot) {
        self.sim.claimed_votes.retain(|&(_, s)| s < from.0);
        self.sim.claimed_proposals.retain(|&s| s < from.0);
    }

    /// Everything the adversary knows, private messages included.
    pub fn view(&self) -> &ChainView {
        &self.sim.adv_view
    }

    /// Messages every participant has received.
    pub fn public_view(&self) -> &ChainView {
        &self.sim.common
    }

    /// Subtree weights in the adversary's view for fork choice at `current_slot`.
    pub fn weights(&self, current_slot: Slot) -> HashMap<BlockId, u64> {
        let view = &self.sim.adv_view;
        subtree_weights(view, GENESIS, filter_valid_votes(view, current_slot))
    }

    pub fn honest_votes(&self, slot: Slot) -> &[Vote] {
        self.sim.honest_votes.get(&slot.0).map_or(&[], Vec::as_slice)
    }

    pub fn record_split(&mut self, split: SlotSplit) {
        self.sim.trace.splits.push(split);
    }

    pub fn log(&mut self, what: impl FnOnce() -> String) {
        self.sim.log(what);
    }

    /// Create a withheld block for a claimed proposal slot.
    pub fn propose(&mut self, parent: BlockId, slot: Slot) -> Result<BlockId> {
        if !self.sim.claimed_proposals.contains(&slot.0) {
            return Err(Error::AdversaryRule(format!("slot {slot} proposal not claimed")));
        }
        if self.sim.slot_at(self.now()) < slot.0 {
            return Err(Error::AdversaryRule(format!("slot {slot} has not started")));
        }
        let Some(pb) = self.sim.adv_view.block(parent) else {
            return Err(Error::AdversaryRule(format!("unknown parent {parent}")));
        };
        if pb.slot >= slot && !pb.is_genesis() {
            return Err(Error::AdversaryRule(format!("parent {parent} not before slot {slot}")));
        }
        let proposer = self.sim.proposer(slot);
        let id = self.sim.new_block(parent, slot, Some(proposer), Origin::Adversarial);
        self.log(|| format!("adversary builds {id} on {parent} for slot {slot}"));
        Ok(id)
    }

    /// Create a withheld vote of a claimed committee member. Rejected if it
    /// would make the validator slashable or is not newer than its last vote.
    pub fn vote(&mut self, validator: ValidatorId, slot: Slot, head: BlockId) -> Result<Vote> {
        if !self.sim.claimed_votes.contains(&(validator, slot.0)) {
            return Err(Error::AdversaryRule(format!("{validator} not claimed for slot {slot}")));
        }
        if self.sim.slot_at(self.now()) < slot.0 {
            return Err(Error::AdversaryRule(format!("slot {slot} has not started")));
        }
        match self.sim.adv_view.block(head) {
            Some(b) if b.slot <= slot => {}
            _ => {
                return Err(Error::AdversaryRule(format!(
                    "head {head} unknown or newer than slot {slot}"
                )))
            }
        }
        let own: Vec<&Vote> = self
            .sim
            .adv_votes
            .iter()
            .map(|r| &r.vote)
            .filter(|v| v.validator == validator)
            .collect();
        if own.iter().any(|v| v.slot >= slot) {
            return Err(Error::AdversaryRule(format!("{validator} already voted at or after slot {slot}")));
        }
        let (ffg_source, ffg_target) = ffg_checkpoints(&self.sim.adv_view, head, slot, &self.sim.cfg.params);
        let vote = Vote {
            validator,
            slot,
            head,
            ffg_source,
            ffg_target,
        };
        let honest_own = self
            .sim
            .honest_votes
            .values()
            .flatten()
            .filter(|v| v.validator == validator);
        let offenses = detect_slashing(own.into_iter().chain(honest_own).chain([&vote]));
        if !offenses.is_empty() {
            return Err(Error::AdversaryRule(format!("vote by {validator} would be slashable")));
        }
        self.sim.adv_view.insert_vote(vote.clone());
        self.sim.adv_votes.push(VoteRecord {
            vote: vote.clone(),
            created: self.now(),
            released: None,
        });
        Ok(vote)
    }

    fn mark_released(&mut self, msgs: &[Message]) {
        let now = self.now();
        for m in msgs {
            if let Message::Vote(v) = m {
                if let Some(r) = self
                    .sim
                    .adv_votes
                    .iter_mut()
                    .find(|r| r.vote == *v && r.released.is_none())
                {
                    r.released = Some(now);
                    self.sim.trace.adv_votes_released += 1;
                    let committee = self.sim.committee(v.slot);
                    if let Some(pos) = committee.iter().position(|&c| c == v.validator) {
                        self.sim.aggregates.add_vote(v, pos);
                    }
                }
            }
        }
    }

    /// Release messages through the ordinary network.
    pub fn broadcast(&mut self, msgs: Vec<Message>) -> Result<()> {
        if msgs.is_empty() {
            return Ok(());
        }
        self.mark_released(&msgs);
        self.sim.broadcast(msgs, Delivery::Network, false).map(|_| ())
    }

    /// Release messages with chosen per-recipient delays; unlisted
    /// participants receive them after `default_ms`, at most Δ. Requires
    /// adversarial delay powers.
    pub fn send_targeted(
        &mut self,
        msgs: Vec<Message>,
        delays: BTreeMap<ValidatorId, u64>,
        default_ms: u64,
    ) -> Result<()> {
        if !self.sim.cfg.adversarial_delay {
            return Err(Error::TargetedNotPermitted);
        }
        if msgs.is_empty() {
            return Ok(());
        }
        self.mark_released(&msgs);
        self.sim.broadcast(msgs, Delivery::Targeted(delays, default_ms), false).map(|_| ())
    }

    pub fn set_timer(&mut self, at: SimTime, tag: u64) -> Result<()> {
        self.sim.queue.schedule(at, EventKind::AdversaryTimer(tag)).map(|_| ())
    }
}

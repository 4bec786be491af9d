use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SimTime;
use crate::error::{Error, Result};
use crate::gasper::{Slot, ValidatorId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recipient {
    Validator(ValidatorId),
    /// The adversary's listening node.
    Observer,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    SlotStart(Slot),
    AttestDue(Slot),
    /// Delivery of in-flight message `msg` that triggers behaviour on arrival.
    Deliver { msg: usize, recipient: Recipient },
    AdversaryTimer(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimEvent {
    pub due: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        (other.due, other.seq).cmp(&(self.due, self.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue of events ordered by `(due, seq)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    now: SimTime,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, due: SimTime, kind: EventKind) -> Result<u64> {
        if due < self.now {
            return Err(Error::ScheduleInPast { due, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(SimEvent { due, seq, kind });
        Ok(seq)
    }

    /// Pop the next event and advance the clock to its due time.
    pub fn pop(&mut self) -> Option<SimEvent> {
        let ev = self.heap.pop()?;
        debug_assert!(ev.due >= self.now);
        self.now = ev.due;
        Some(ev)
    }

    pub fn peek_due(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.due)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn earlier_due_runs_first() {
        let mut q = EventQueue::new();
        q.schedule(SimTime(100), EventKind::AdversaryTimer(1)).unwrap();
        q.schedule(SimTime(50), EventKind::AdversaryTimer(2)).unwrap();
        assert_eq!(q.pop().unwrap().kind, EventKind::AdversaryTimer(2));
        assert_eq!(q.now(), SimTime(50));
        assert_eq!(q.pop().unwrap().kind, EventKind::AdversaryTimer(1));
    }

    #[test]
    fn equal_due_runs_in_schedule_order() {
        let mut q = EventQueue::new();
        for tag in 0..5 {
            q.schedule(SimTime(7), EventKind::AdversaryTimer(tag)).unwrap();
        }
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| e.kind).collect();
        let expected: Vec<_> = (0..5).map(EventKind::AdversaryTimer).collect();
        assert_eq!(order, expected);
    }

    #[test]
    fn past_scheduling_is_rejected() {
        let mut q = EventQueue::new();
        q.schedule(SimTime(10), EventKind::SlotStart(Slot(0))).unwrap();
        q.pop();
        let err = q.schedule(SimTime(9), EventKind::SlotStart(Slot(1))).unwrap_err();
        assert!(matches!(err, Error::ScheduleInPast { .. }));
        assert!(q.schedule(SimTime(10), EventKind::SlotStart(Slot(1))).is_ok());
    }
}

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::comms::{EntityId, Message};
use crate::error::SimError;
use crate::mobility::VehicleId;

/// Slack for comparing event times against the tick clock.
pub(crate) const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum EventPayload {
    Insertion {
        vehicle: VehicleId,
    },
    HaltStart {
        vehicle: VehicleId,
    },
    HaltEnd {
        vehicle: VehicleId,
    },
    Announcement {
        vehicle: VehicleId,
    },
    Delivery {
        to: EntityId,
        msg: Box<Message>,
    },
    /// Receiver-side evaluation window closing.
    EvalTimer {
        vehicle: VehicleId,
        event_id: u64,
    },
    /// RSU giving up on a quorum.
    AdjudicationTimer {
        event_id: u64,
    },
    /// Marker used by tests to observe processing order.
    Probe(u32),
}

impl EventPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            EventPayload::Insertion { .. } => "vehicle-insertion",
            EventPayload::HaltStart { .. } => "halt-start",
            EventPayload::HaltEnd { .. } => "halt-end",
            EventPayload::Announcement { .. } => "announcement",
            EventPayload::Delivery { .. } => "message-delivery",
            EventPayload::EvalTimer { .. } | EventPayload::AdjudicationTimer { .. } => {
                "timer-expiry"
            }
            EventPayload::Probe(_) => "probe",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub fire_at: f64,
    pub sequence_id: u64,
    pub payload: EventPayload,
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    // Reversed so the max-heap pops the earliest (fire_at, sequence_id).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .total_cmp(&self.fire_at)
            .then_with(|| other.sequence_id.cmp(&self.sequence_id))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        EventQueue::default()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Enqueues an event, stamping it with the next sequence id.
    pub fn schedule(
        &mut self,
        now: f64,
        fire_at: f64,
        payload: EventPayload,
    ) -> Result<u64, SimError> {
        if !(fire_at >= now - TIME_EPS) {
            return Err(SimError::Causality { fire_at, now });
        }
        let sequence_id = self.next_seq;
        self.next_seq += 1;
        self.heap.push(SimEvent {
            fire_at,
            sequence_id,
            payload,
        });
        Ok(sequence_id)
    }

    pub fn peek(&self) -> Option<&SimEvent> {
        self.heap.peek()
    }

    /// Next event due at or before `now`.
    pub fn pop_due(&mut self, now: f64) -> Option<SimEvent> {
        if self.heap.peek()?.fire_at <= now + TIME_EPS {
            self.heap.pop()
        } else {
            None
        }
    }
}

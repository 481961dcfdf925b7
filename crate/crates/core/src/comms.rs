//! Unit-disk radio, multi-hop relay with deduplication, beacons and RSUs.

use std::collections::BTreeSet;
use std::fmt;

use crate::mobility::{Vehicle, VehicleId};
use crate::road::EdgeId;
use crate::trust::{Observation, Verdict};

/// Anything with a radio: a vehicle OBU or a roadside unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityId {
    Vehicle(VehicleId),
    Rsu(u32),
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityId::Vehicle(id) => write!(f, "v{id}"),
            EntityId::Rsu(id) => write!(f, "rsu{id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    Beacon,
    EventAnnouncement,
    Diversion,
    TrustQuery,
    TrustResponse,
    AttackReport,
    Corrective,
    TrustUpdate,
}

impl MessageKind {
    pub const ALL: [MessageKind; 8] = [
        MessageKind::Beacon,
        MessageKind::EventAnnouncement,
        MessageKind::Diversion,
        MessageKind::TrustQuery,
        MessageKind::TrustResponse,
        MessageKind::AttackReport,
        MessageKind::Corrective,
        MessageKind::TrustUpdate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Beacon => "beacon",
            MessageKind::EventAnnouncement => "event_announcement",
            MessageKind::Diversion => "diversion",
            MessageKind::TrustQuery => "trust_query",
            MessageKind::TrustResponse => "trust_response",
            MessageKind::AttackReport => "attack_report",
            MessageKind::Corrective => "corrective",
            MessageKind::TrustUpdate => "trust_update",
        }
    }

    /// Kinds that exist only to run a trust protocol.
    pub fn is_trust_traffic(self) -> bool {
        matches!(
            self,
            MessageKind::TrustQuery
                | MessageKind::TrustResponse
                | MessageKind::AttackReport
                | MessageKind::Corrective
                | MessageKind::TrustUpdate
        )
    }

    pub fn is_relayable(self) -> bool {
        matches!(
            self,
            MessageKind::EventAnnouncement | MessageKind::Diversion | MessageKind::Corrective
        )
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Priority {
    Normal,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Diversion,
    Accident,
    Resolution,
}

/// A claimed road event.
///
/// Whether the event really happened is kept private to this crate so
/// that trust decisions can only learn it by sensing on location.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub id: u64,
    pub kind: EventKind,
    pub location: EdgeId,
    /// Distance into `location` where the event is claimed to be.
    pub offset: f64,
    pub reported_at: f64,
    ground_truth: bool,
}

impl EventRecord {
    pub fn new(
        id: u64,
        kind: EventKind,
        location: EdgeId,
        offset: f64,
        reported_at: f64,
        ground_truth: bool,
    ) -> Self {
        EventRecord {
            id,
            kind,
            location,
            offset,
            reported_at,
            ground_truth,
        }
    }

    pub(crate) fn ground_truth(&self) -> bool {
        self.ground_truth
    }

    #[cfg(test)]
    pub(crate) fn with_ground_truth(mut self, truth: bool) -> Self {
        self.ground_truth = truth;
        self
    }
}

/// Kind-specific message content beyond the optional event.
#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Empty,
    Beacon {
        x: f64,
        y: f64,
        speed: f64,
    },
    TrustQuery {
        subject: EntityId,
        event_id: u64,
    },
    TrustResponse {
        subject: EntityId,
        event_id: u64,
        score: f64,
    },
    AttackReport {
        msg_ref: u64,
        accused: EntityId,
        observation: Observation,
    },
    Corrective {
        event_id: u64,
        verdict: Verdict,
    },
    TrustUpdate {
        subject: EntityId,
        score: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub msg_id: u64,
    pub kind: MessageKind,
    pub origin: EntityId,
    /// Current hop.
    pub sender: EntityId,
    /// Unicast target; `None` for broadcasts.
    pub dest: Option<EntityId>,
    pub event: Option<EventRecord>,
    pub hops_remaining: u32,
    pub priority: Priority,
    pub sent_at: f64,
    pub body: Body,
}

impl Message {
    pub fn new(msg_id: u64, kind: MessageKind, origin: EntityId, sent_at: f64) -> Self {
        Message {
            msg_id,
            kind,
            origin,
            sender: origin,
            dest: None,
            event: None,
            hops_remaining: 0,
            priority: Priority::Normal,
            sent_at,
            body: Body::Empty,
        }
    }
}

/// A radio-equipped entity's position, as seen by the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Station {
    pub id: EntityId,
    pub x: f64,
    pub y: f64,
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Inclusive unit-disk reachability.
pub fn in_range(a: (f64, f64), b: (f64, f64), range: f64) -> bool {
    distance(a, b) <= range
}

/// Receivers of a broadcast from `from`, in ascending id order.
pub fn broadcast(from: Station, range: f64, stations: &[Station]) -> Vec<EntityId> {
    let mut out: Vec<EntityId> = stations
        .iter()
        .filter(|s| s.id != from.id && in_range((from.x, from.y), (s.x, s.y), range))
        .map(|s| s.id)
        .collect();
    out.sort_unstable();
    out
}

/// Rebroadcast copy of an accepted message, if it still has hop budget.
///
/// Each receiver relays a given `msg_id` at most once; `relayed` is that
/// receiver's memory of what it already forwarded.
pub fn relay(receiver: EntityId, m: &Message, relayed: &mut BTreeSet<u64>) -> Option<Message> {
    if !m.kind.is_relayable() || !relayed.insert(m.msg_id) || m.hops_remaining == 0 {
        return None;
    }
    let mut copy = m.clone();
    copy.hops_remaining -= 1;
    copy.sender = receiver;
    copy.dest = None;
    Some(copy)
}

/// Periodic status message; only vehicles on the road beacon.
pub fn beacon_tick(v: &Vehicle, at: (f64, f64), msg_id: u64, now: f64) -> Option<Message> {
    if !v.on_road() {
        return None;
    }
    let mut m = Message::new(msg_id, MessageKind::Beacon, EntityId::Vehicle(v.id), now);
    m.body = Body::Beacon {
        x: at.0,
        y: at.1,
        speed: v.speed,
    };
    Some(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rsu {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub range: f64,
    pub event_log: Vec<(EventRecord, Verdict)>,
}

impl Rsu {
    pub fn new(id: u32, x: f64, y: f64, range: f64) -> Self {
        assert!(range > 0.0, "RSU range must be positive");
        Rsu {
            id,
            x,
            y,
            range,
            event_log: Vec::new(),
        }
    }

    pub fn station(&self) -> Station {
        Station {
            id: EntityId::Rsu(self.id),
            x: self.x,
            y: self.y,
        }
    }
}

/// Receivers of an RSU-originated corrective or trust update.
pub fn rsu_disseminate(r: &Rsu, m: &Message, stations: &[Station]) -> Vec<EntityId> {
    debug_assert!(matches!(
        m.kind,
        MessageKind::Corrective | MessageKind::TrustUpdate
    ));
    broadcast(r.station(), r.range, stations)
}

/// Per-kind transmission counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MessageCounts([u64; 8]);

impl MessageCounts {
    pub fn add(&mut self, kind: MessageKind) {
        self.0[kind.index()] += 1;
    }

    pub fn get(&self, kind: MessageKind) -> u64 {
        self.0[kind.index()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn trust_messages(&self) -> u64 {
        MessageKind::ALL
            .iter()
            .filter(|k| k.is_trust_traffic())
            .map(|k| self.get(*k))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{Role, VehicleState};

    fn st(id: u32, x: f64) -> Station {
        Station {
            id: EntityId::Vehicle(id),
            x,
            y: 0.0,
        }
    }

    #[test]
    fn unit_disk_reach_is_inclusive() {
        let from = st(0, 0.0);
        let others = [st(3, 300.0), st(1, 250.0), st(2, 350.0)];
        assert_eq!(
            broadcast(from, 300.0, &others),
            vec![EntityId::Vehicle(1), EntityId::Vehicle(3)]
        );
    }

    #[test]
    fn sender_does_not_hear_itself() {
        let from = st(0, 0.0);
        assert!(broadcast(from, 300.0, &[from]).is_empty());
    }

    fn diversion(hops: u32) -> Message {
        let mut m = Message::new(9, MessageKind::Diversion, EntityId::Vehicle(0), 1.0);
        m.hops_remaining = hops;
        m
    }

    #[test]
    fn relay_decrements_and_dedups() {
        let mut seen = BTreeSet::new();
        let m = diversion(3);
        let copy = relay(EntityId::Vehicle(4), &m, &mut seen).unwrap();
        assert_eq!(copy.hops_remaining, 2);
        assert_eq!(copy.sender, EntityId::Vehicle(4));
        assert_eq!(copy.origin, EntityId::Vehicle(0));
        assert!(relay(EntityId::Vehicle(4), &m, &mut seen).is_none());
    }

    #[test]
    fn exhausted_hop_budget_is_dropped() {
        let mut seen = BTreeSet::new();
        assert!(relay(EntityId::Vehicle(4), &diversion(0), &mut seen).is_none());
        let mut b = Message::new(1, MessageKind::Beacon, EntityId::Vehicle(1), 0.0);
        b.hops_remaining = 3;
        assert!(relay(EntityId::Vehicle(4), &b, &mut seen).is_none());
    }

    #[test]
    fn only_road_vehicles_beacon() {
        let mut v = Vehicle::new(1, Role::Regular);
        v.state = VehicleState::Driving;
        v.speed = 5.0;
        let m = beacon_tick(&v, (1.0, 2.0), 7, 3.0).unwrap();
        assert_eq!(
            m.body,
            Body::Beacon {
                x: 1.0,
                y: 2.0,
                speed: 5.0
            }
        );
        v.state = VehicleState::Finished;
        assert!(beacon_tick(&v, (1.0, 2.0), 8, 3.0).is_none());
    }

    #[test]
    fn rsu_with_nobody_around() {
        let r = Rsu::new(0, 0.0, 0.0, 300.0);
        let m = Message::new(1, MessageKind::Corrective, EntityId::Rsu(0), 0.0);
        assert!(rsu_disseminate(&r, &m, &[st(1, 1000.0)]).is_empty());
        assert_eq!(
            rsu_disseminate(&r, &m, &[st(1, 100.0)]),
            vec![EntityId::Vehicle(1)]
        );
    }

    #[test]
    fn counts_split_trust_traffic() {
        let mut c = MessageCounts::default();
        c.add(MessageKind::Beacon);
        c.add(MessageKind::TrustQuery);
        c.add(MessageKind::TrustResponse);
        c.add(MessageKind::Diversion);
        assert_eq!(c.total(), 4);
        assert_eq!(c.trust_messages(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reach_depends_only_on_distance(
                ax in -1000.0f64..1000.0, ay in -1000.0f64..1000.0,
                bx in -1000.0f64..1000.0, by in -1000.0f64..1000.0,
                range in 1.0f64..1000.0,
            ) {
                let a = Station { id: EntityId::Vehicle(0), x: ax, y: ay };
                let b = Station { id: EntityId::Vehicle(1), x: bx, y: by };
                let ab = !broadcast(a, range, &[b]).is_empty();
                let ba = !broadcast(b, range, &[a]).is_empty();
                prop_assert_eq!(ab, ba);
                prop_assert_eq!(ab, distance((ax, ay), (bx, by)) <= range);
            }

            #[test]
            fn relay_chain_spends_one_hop_each(hops in 0u32..10, relayers in 1u32..20) {
                let mut m = diversion(hops);
                let mut forwarded = 0;
                for r in 1..=relayers {
                    let mut seen = BTreeSet::new();
                    match relay(EntityId::Vehicle(r), &m, &mut seen) {
                        Some(next) => {
                            prop_assert_eq!(next.hops_remaining + 1, m.hops_remaining);
                            m = next;
                            forwarded += 1;
                        }
                        None => break,
                    }
                }
                prop_assert_eq!(forwarded, hops.min(relayers));
            }
        }
    }
}

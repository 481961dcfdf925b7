use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::queue::{EventPayload, EventQueue, SimEvent, TIME_EPS};
use super::{RngStream, SimClock};
use crate::comms::{
    self, Body, EntityId, EventKind, EventRecord, Message, MessageCounts, MessageKind, Priority,
    Rsu, Station,
};
use crate::error::SimError;
use crate::harness::{
    AnnounceScript, AnnounceTrigger, HaltScript, MetricsReport, ScenarioConfig, VehicleRecord,
    VerdictRecord,
};
use crate::mobility::{self, Role, Vehicle, VehicleId, VehicleState};
use crate::road::{RoadGraph, Route};
use crate::trust::{
    self, Decision, Dispute, Evaluation, Gate, Observation, Outcome, Party, Scheme, Severity,
    TrustRegistry, TrustState, Verdict,
};

/// What a step did, in order; recorded only when tracing is on.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEntry {
    Event {
        kind: &'static str,
        probe: Option<u32>,
    },
    Move(VehicleId),
    Deliver {
        msg_id: u64,
        to: EntityId,
    },
}

/// A vehicle's view of one announced event.
#[derive(Debug, Clone, PartialEq)]
enum Belief {
    Evaluating(Box<Evaluation>),
    Accepted(Box<Message>),
    Rejected,
    Retracted,
}

/// On-board unit state.
#[derive(Debug, Clone, Default)]
struct Obu {
    processed: BTreeSet<u64>,
    relayed: BTreeSet<u64>,
    neighbors: BTreeMap<VehicleId, f64>,
    beliefs: BTreeMap<u64, Belief>,
    sensed: BTreeSet<u64>,
    filed: BTreeSet<u64>,
    outgoing_reports: Vec<Message>,
    trust: TrustState,
    latency: Option<f64>,
    corrected: bool,
}

#[derive(Debug, Clone, Default)]
struct ScriptState {
    halted: bool,
    announce_started: Option<f64>,
    event: Option<EventRecord>,
}

pub struct World {
    cfg: ScenarioConfig,
    graph: RoadGraph,
    clock: SimClock,
    events: EventQueue,
    deliveries: EventQueue,
    rng: RngStream,
    vehicles: Vec<Vehicle>,
    obus: Vec<Obu>,
    rsus: Vec<Rsu>,
    registry: TrustRegistry,
    disputes: BTreeMap<u64, Dispute>,
    closed_disputes: BTreeSet<u64>,
    waiting: VecDeque<VehicleId>,
    halt: Option<HaltScript>,
    announce: Option<AnnounceScript>,
    script: ScriptState,
    next_msg_id: u64,
    counts: MessageCounts,
    suppressed: u64,
    verdicts: Vec<VerdictRecord>,
    corrective_prejunction: u64,
    min_gap: f64,
    trace: Option<Vec<TraceEntry>>,
    #[cfg(test)]
    invert_truth: bool,
}

impl World {
    pub fn new(cfg: &ScenarioConfig) -> Result<World, SimError> {
        cfg.validate()?;
        let graph = RoadGraph::reference(&cfg.geometry)?;
        let mut rng = RngStream::new(cfg.seed);
        let mut events = EventQueue::new();
        let mut vehicles = Vec::with_capacity(cfg.n_vehicles as usize);
        let announce = cfg.announcement();
        for id in 0..cfg.n_vehicles {
            let role = if cfg.official.contains(&id) {
                Role::Official
            } else if announce.is_some_and(|a| !a.truthful && a.vehicle == id) {
                Role::MaliciousCapable
            } else {
                Role::Regular
            };
            vehicles.push(Vehicle::new(id, role));
        }
        for (at, payload) in mobility::insertion_schedule(cfg.n_vehicles, cfg.insertion_gap) {
            let jitter = if cfg.depart_jitter > 0.0 {
                rng.next_f64() * cfg.depart_jitter
            } else {
                0.0
            };
            events.schedule(0.0, at + jitter, payload)?;
        }
        let rsus = cfg
            .rsu_positions()
            .into_iter()
            .enumerate()
            .map(|(i, (x, y))| Rsu::new(i as u32, x, y, cfg.rsu_range))
            .collect();
        Ok(World {
            graph,
            clock: SimClock::new(cfg.step),
            events,
            deliveries: EventQueue::new(),
            rng,
            obus: vec![Obu::default(); cfg.n_vehicles as usize],
            vehicles,
            rsus,
            registry: TrustRegistry::default(),
            disputes: BTreeMap::new(),
            closed_disputes: BTreeSet::new(),
            waiting: VecDeque::new(),
            halt: cfg.halt(),
            announce,
            script: ScriptState::default(),
            next_msg_id: 0,
            counts: MessageCounts::default(),
            suppressed: 0,
            verdicts: Vec::new(),
            corrective_prejunction: 0,
            min_gap: f64::INFINITY,
            trace: None,
            #[cfg(test)]
            invert_truth: false,
            cfg: cfg.clone(),
        })
    }

    pub fn now(&self) -> f64 {
        self.clock.now()
    }

    pub fn graph(&self) -> &RoadGraph {
        &self.graph
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn rsus(&self) -> &[Rsu] {
        &self.rsus
    }

    pub fn registry(&self) -> &TrustRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut TrustRegistry {
        &mut self.registry
    }

    pub fn counts(&self) -> &MessageCounts {
        &self.counts
    }

    pub fn suppressed(&self) -> u64 {
        self.suppressed
    }

    pub fn rng(&mut self) -> &mut RngStream {
        &mut self.rng
    }

    /// Smallest bumper-to-bumper gap observed between consecutive vehicles.
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn trace(&self) -> &[TraceEntry] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn schedule(&mut self, fire_at: f64, payload: EventPayload) -> Result<u64, SimError> {
        self.events.schedule(self.now(), fire_at, payload)
    }

    /// Puts a vehicle on the road directly, bypassing the insertion queue.
    pub fn place_vehicle(&mut self, id: VehicleId, route: Route, distance: f64, speed: f64) {
        let pos = self.graph.position_at(route, distance);
        let shared = self.graph.shared_prefix_len();
        let v = &mut self.vehicles[id as usize];
        v.pos = pos;
        v.speed = speed;
        v.state = VehicleState::Driving;
        v.inserted_at = self.clock.now();
        v.passed_junction = pos.edge_index >= shared;
        self.waiting.retain(|w| *w != id);
    }

    /// Whether the vehicle currently believes the announced event.
    pub fn believes(&self, id: VehicleId, event_id: u64) -> bool {
        matches!(
            self.obus[id as usize].beliefs.get(&event_id),
            Some(Belief::Accepted(_))
        )
    }

    pub fn decision_latency(&self, id: VehicleId) -> Option<f64> {
        self.obus[id as usize].latency
    }

    pub fn scripted_event(&self) -> Option<&EventRecord> {
        self.script.event.as_ref()
    }

    pub fn run_to_end(&mut self) {
        while self.now() < self.cfg.duration - TIME_EPS {
            self.step();
        }
    }

    /// One fixed step: events, then vehicle motion in id order, then radio.
    pub fn step(&mut self) {
        self.clock.advance();
        let now = self.now();
        while let Some(ev) = self.events.pop_due(now) {
            self.handle_event(ev);
        }
        self.try_insertions();
        for id in 0..self.vehicles.len() {
            // A vehicle entering at `now` starts moving on the next step.
            let v = &self.vehicles[id];
            if v.state == VehicleState::Driving && v.inserted_at < now - TIME_EPS {
                self.move_vehicle(id as VehicleId);
            }
        }
        self.check_gaps();
        self.emit_beacons();
        self.flush_reports();
        while let Some(ev) = self.deliveries.pop_due(now) {
            if let EventPayload::Delivery { to, msg } = ev.payload {
                self.deliver(to, *msg);
            }
        }
    }

    fn record(&mut self, entry: TraceEntry) {
        if let Some(t) = self.trace.as_mut() {
            t.push(entry);
        }
    }

    fn fresh_msg_id(&mut self) -> u64 {
        self.next_msg_id += 1;
        self.next_msg_id
    }

    fn handle_event(&mut self, ev: SimEvent) {
        let probe = match ev.payload {
            EventPayload::Probe(p) => Some(p),
            _ => None,
        };
        self.record(TraceEntry::Event {
            kind: ev.payload.kind(),
            probe,
        });
        match ev.payload {
            EventPayload::Insertion { vehicle } => {
                if self.vehicles[vehicle as usize].state == VehicleState::QueuedForInsertion {
                    self.waiting.push_back(vehicle);
                }
            }
            EventPayload::HaltStart { vehicle } => self.start_halt(vehicle),
            EventPayload::HaltEnd { vehicle } => {
                mobility::resume(&mut self.vehicles[vehicle as usize]);
            }
            EventPayload::Announcement { vehicle } => self.announce(vehicle),
            EventPayload::Delivery { to, msg } => self.deliver(to, *msg),
            EventPayload::EvalTimer { vehicle, event_id } => {
                self.finish_evaluation(vehicle, event_id)
            }
            EventPayload::AdjudicationTimer { event_id } => self.check_dispute(event_id),
            EventPayload::Probe(_) => {}
        }
    }

    // ---- mobility ----

    /// Distance to, and speed of, the nearest road vehicle ahead of `id`.
    fn gap_ahead(&self, id: VehicleId) -> Option<(f64, f64)> {
        let me = &self.vehicles[id as usize];
        let mine = self.graph.distance_along(&me.pos);
        self.gap_from(me.pos.route, me.pos.edge_index, mine, Some(id))
    }

    fn gap_from(
        &self,
        route: Route,
        edge_index: usize,
        mine: f64,
        skip: Option<VehicleId>,
    ) -> Option<(f64, f64)> {
        let edges = self.graph.route(route);
        let mut best: Option<(f64, f64)> = None;
        for other in &self.vehicles {
            if Some(other.id) == skip || !other.on_road() {
                continue;
            }
            let theirs = self.graph.route(other.pos.route)[other.pos.edge_index];
            let Some(k) = edges[edge_index..].iter().position(|e| *e == theirs) else {
                continue;
            };
            let k = k + edge_index;
            let ahead = edges[..k]
                .iter()
                .map(|e| self.graph.edge(*e).length)
                .sum::<f64>()
                + other.pos.offset
                - mine;
            // Co-located vehicles: the lower id leads. An insertion probe
            // (no self) sees anything at the entry point as ahead.
            let in_front = ahead > 0.0 || (ahead == 0.0 && skip.is_none_or(|s| other.id < s));
            if in_front && best.is_none_or(|(b, _)| ahead < b) {
                best = Some((ahead, other.speed));
            }
        }
        best
    }

    fn try_insertions(&mut self) {
        let now = self.now();
        let limit = self.cfg.geometry.speed_limit;
        while let Some(&id) = self.waiting.front() {
            let speed = match self.gap_from(Route::Primary, 0, 0.0, None) {
                None => limit,
                Some((g, lead)) if g >= self.cfg.follow.min_gap => {
                    mobility::desired_speed(g, lead, limit, &self.cfg.follow, self.clock.step())
                }
                Some(_) => break,
            };
            self.waiting.pop_front();
            let v = &mut self.vehicles[id as usize];
            v.state = VehicleState::Driving;
            v.speed = speed;
            v.inserted_at = now;
        }
    }

    fn move_vehicle(&mut self, id: VehicleId) {
        self.record(TraceEntry::Move(id));
        let now = self.now();
        let dt = self.clock.step();
        let gap = self.gap_ahead(id);
        let p = self.cfg.follow;
        let idx = id as usize;
        let limit = self.graph.edge_at(&self.vehicles[idx].pos).speed_limit;
        let before = self.graph.distance_along(&self.vehicles[idx].pos);
        let (gap, lead) = gap.unwrap_or((f64::INFINITY, 0.0));
        let mut speed = mobility::follow_speed(self.vehicles[idx].speed, gap, lead, limit, &p, dt);

        let stop_target = self.halt.filter(|h| {
            h.vehicle == id && !self.script.halted && self.vehicles[idx].route() == Route::Primary
        });
        let mut arrived = false;
        if let Some(h) = stop_target {
            let remaining = h.at - before;
            speed = speed.min(mobility::stopping_speed(remaining, &p, dt));
            if speed * dt >= remaining - 1e-9 {
                arrived = true;
                let v = &mut self.vehicles[idx];
                v.speed = 0.0;
                mobility::move_by(v, remaining.max(0.0), &self.graph, now);
            }
        }
        if !arrived {
            let v = &mut self.vehicles[idx];
            v.speed = speed;
            mobility::advance(v, dt, &self.graph, now);
        }
        if arrived {
            self.script.halted = true;
            let _ = self
                .events
                .schedule(now, now, EventPayload::HaltStart { vehicle: id });
        }
        debug_assert!(
            self.vehicles[idx].state == VehicleState::Finished
                || self.graph.position_is_valid(&self.vehicles[idx].pos)
        );

        let after = self.graph.distance_along(&self.vehicles[idx].pos);
        if let Some(a) = self.announce {
            if let AnnounceTrigger::AtPosition(at) = a.trigger {
                if a.vehicle == id
                    && self.script.announce_started.is_none()
                    && before < at
                    && after >= at
                {
                    self.script.announce_started = Some(now);
                    let _ =
                        self.events
                            .schedule(now, now, EventPayload::Announcement { vehicle: id });
                }
            }
        }
        self.sense_events(id);
    }

    fn start_halt(&mut self, id: VehicleId) {
        let now = self.now();
        let Some(h) = self.halt.filter(|h| h.vehicle == id) else {
            return;
        };
        match mobility::halt(&mut self.vehicles[id as usize], h.duration, now) {
            Ok((at, payload)) => {
                let _ = self.events.schedule(now, at, payload);
            }
            Err(_) => return,
        }
        if let Some(a) = self.announce.filter(|a| a.vehicle == id) {
            if let AnnounceTrigger::AfterHalt(offset) = a.trigger {
                self.script.announce_started = Some(now + offset);
                let _ = self.events.schedule(
                    now,
                    now + offset,
                    EventPayload::Announcement { vehicle: id },
                );
            }
        }
    }

    fn check_gaps(&mut self) {
        for v in &self.vehicles {
            if v.on_road() {
                if let Some((g, _)) = self.gap_ahead(v.id) {
                    self.min_gap = self.min_gap.min(g);
                }
            }
        }
    }

    // ---- comms ----

    fn coords_of(&self, id: EntityId) -> (f64, f64) {
        match id {
            EntityId::Vehicle(v) => self.graph.coords(&self.vehicles[v as usize].pos),
            EntityId::Rsu(r) => {
                let r = &self.rsus[r as usize];
                (r.x, r.y)
            }
        }
    }

    fn range_of(&self, id: EntityId) -> f64 {
        match id {
            EntityId::Vehicle(_) => self.cfg.radio_range,
            EntityId::Rsu(r) => self.rsus[r as usize].range,
        }
    }

    fn stations(&self) -> Vec<Station> {
        let vehicles = self.vehicles.iter().filter(|v| v.on_road()).map(|v| {
            let (x, y) = self.graph.coords(&v.pos);
            Station {
                id: EntityId::Vehicle(v.id),
                x,
                y,
            }
        });
        vehicles.chain(self.rsus.iter().map(Rsu::station)).collect()
    }

    /// Transmits `m` from `from`; broadcasts reach everyone in range,
    /// unicasts only their destination.
    fn transmit(&mut self, from: EntityId, m: Message) {
        self.counts.add(m.kind);
        let at = self.coords_of(from);
        let station = Station {
            id: from,
            x: at.0,
            y: at.1,
        };
        let range = self.range_of(from);
        let receivers = match m.dest {
            Some(to) => {
                let on_air = match to {
                    EntityId::Vehicle(v) => self.vehicles[v as usize].on_road(),
                    EntityId::Rsu(_) => true,
                };
                if on_air && comms::in_range(at, self.coords_of(to), range) {
                    vec![to]
                } else {
                    vec![]
                }
            }
            None => match from {
                EntityId::Rsu(r) => {
                    comms::rsu_disseminate(&self.rsus[r as usize], &m, &self.stations())
                }
                EntityId::Vehicle(_) => comms::broadcast(station, range, &self.stations()),
            },
        };
        let now = self.now();
        let fire_at = match m.priority {
            Priority::High => now,
            Priority::Normal => now + self.clock.step(),
        };
        for to in receivers {
            let msg = Box::new(m.clone());
            let _ = self
                .deliveries
                .schedule(now, fire_at, EventPayload::Delivery { to, msg });
        }
    }

    fn emit_beacons(&mut self) {
        let now = self.now();
        let period = self.cfg.beacon_period;
        let phase = now / period;
        if (phase - phase.round()).abs() > 1e-6 {
            return;
        }
        for idx in 0..self.vehicles.len() {
            let at = self.graph.coords(&self.vehicles[idx].pos);
            let id = self.next_msg_id + 1;
            if let Some(m) = comms::beacon_tick(&self.vehicles[idx], at, id, now) {
                self.next_msg_id = id;
                self.transmit(EntityId::Vehicle(idx as VehicleId), m);
            }
        }
    }

    fn nearest_rsu(&self, from: (f64, f64)) -> Option<EntityId> {
        self.rsus
            .iter()
            .map(|r| (comms::distance(from, (r.x, r.y)), r))
            .filter(|(d, r)| *d <= r.range)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, r)| EntityId::Rsu(r.id))
    }

    /// Sends queued attack reports once an RSU is in range.
    fn flush_reports(&mut self) {
        for idx in 0..self.obus.len() {
            if self.obus[idx].outgoing_reports.is_empty() || !self.vehicles[idx].on_road() {
                continue;
            }
            let me = EntityId::Vehicle(idx as VehicleId);
            let Some(rsu) = self.nearest_rsu(self.coords_of(me)) else {
                continue;
            };
            for mut r in std::mem::take(&mut self.obus[idx].outgoing_reports) {
                r.dest = Some(rsu);
                self.transmit(me, r);
            }
        }
    }

    fn deliver(&mut self, to: EntityId, m: Message) {
        self.record(TraceEntry::Deliver {
            msg_id: m.msg_id,
            to,
        });
        match to {
            EntityId::Vehicle(v) => self.deliver_to_vehicle(v, m),
            EntityId::Rsu(r) => self.deliver_to_rsu(r, m),
        }
    }

    fn deliver_to_vehicle(&mut self, id: VehicleId, m: Message) {
        let idx = id as usize;
        if !self.vehicles[idx].on_road() || !self.obus[idx].processed.insert(m.msg_id) {
            return;
        }
        let now = self.now();
        let me = EntityId::Vehicle(id);
        match m.kind {
            MessageKind::Beacon => {
                if let EntityId::Vehicle(from) = m.origin {
                    self.obus[idx].neighbors.insert(from, now);
                }
            }
            MessageKind::Diversion | MessageKind::EventAnnouncement => self.on_announcement(id, m),
            MessageKind::TrustQuery => {
                if let Body::TrustQuery { subject, event_id } = m.body {
                    let score = self.obus[idx]
                        .trust
                        .direct_evidence
                        .get(&subject)
                        .copied()
                        .unwrap_or(trust::INITIAL_TRUST);
                    self.respond(me, m.sender, subject, event_id, score);
                }
            }
            MessageKind::TrustResponse => {
                if let Body::TrustResponse {
                    event_id, score, ..
                } = m.body
                {
                    if let Some(Belief::Evaluating(e)) = self.obus[idx].beliefs.get_mut(&event_id) {
                        match m.sender {
                            EntityId::Rsu(_) => e.rsu = Some(score),
                            EntityId::Vehicle(_) => e.indirect.push(score),
                        }
                    }
                }
            }
            MessageKind::Corrective => {
                if let Body::Corrective { event_id, .. } = m.body {
                    self.on_corrective(id, event_id, &m);
                }
            }
            MessageKind::TrustUpdate | MessageKind::AttackReport => {}
        }
    }

    fn respond(
        &mut self,
        me: EntityId,
        to: EntityId,
        subject: EntityId,
        event_id: u64,
        score: f64,
    ) {
        let mut r = Message::new(
            self.fresh_msg_id(),
            MessageKind::TrustResponse,
            me,
            self.now(),
        );
        r.dest = Some(to);
        r.body = Body::TrustResponse {
            subject,
            event_id,
            score,
        };
        self.transmit(me, r);
    }

    fn on_announcement(&mut self, id: VehicleId, m: Message) {
        let idx = id as usize;
        let Some(event) = m.event.clone() else { return };
        let now = self.now();
        match self.obus[idx].beliefs.get(&event.id) {
            Some(Belief::Accepted(_)) => {
                self.relay_from(id, &m);
                return;
            }
            Some(_) => return,
            None => {}
        }
        match self.cfg.scheme.scheme {
            Scheme::None | Scheme::SenderSide => {
                let (decision, latency) = trust::receiver_decide(1.0, &self.cfg.scheme);
                debug_assert_eq!(decision, Decision::Accept);
                self.obus[idx].latency.get_or_insert(latency);
                self.accept(id, m);
            }
            Scheme::ReceiverSide => {
                let me = EntityId::Vehicle(id);
                let here = self.coords_of(me);
                let fresh = 1.5 * self.cfg.beacon_period;
                let neighbors: Vec<EntityId> = self.obus[idx]
                    .neighbors
                    .iter()
                    .filter(|(n, heard)| {
                        let nv = &self.vehicles[**n as usize];
                        now - **heard <= fresh + TIME_EPS
                            && nv.on_road()
                            && comms::in_range(
                                here,
                                self.graph.coords(&nv.pos),
                                self.cfg.radio_range,
                            )
                    })
                    .map(|(n, _)| EntityId::Vehicle(*n))
                    .collect();
                let rsu = self.nearest_rsu(here);
                let mut next = self.next_msg_id;
                let queries = trust::receiver_on_message(
                    me,
                    &m,
                    &neighbors,
                    rsu,
                    || {
                        next += 1;
                        next
                    },
                    now,
                );
                self.next_msg_id = next;
                let eval = Evaluation {
                    event: event.clone(),
                    origin: m.origin,
                    first_msg: m,
                    started_at: now,
                    indirect: Vec::new(),
                    rsu: None,
                };
                self.obus[idx]
                    .beliefs
                    .insert(event.id, Belief::Evaluating(Box::new(eval)));
                for q in queries {
                    self.transmit(me, q);
                }
                let _ = self.events.schedule(
                    now,
                    now + self.cfg.scheme.eval_timer,
                    EventPayload::EvalTimer {
                        vehicle: id,
                        event_id: event.id,
                    },
                );
            }
        }
    }

    fn finish_evaluation(&mut self, id: VehicleId, event_id: u64) {
        let idx = id as usize;
        let Some(Belief::Evaluating(eval)) = self.obus[idx].beliefs.get(&event_id).cloned() else {
            return;
        };
        if !self.vehicles[idx].on_road() {
            self.obus[idx].beliefs.insert(event_id, Belief::Rejected);
            return;
        }
        let direct = self.obus[idx]
            .trust
            .direct_evidence
            .get(&eval.origin)
            .copied();
        let decision =
            match trust::aggregate_trust(direct, &eval.indirect, eval.rsu, &self.cfg.scheme) {
                Ok(t) => trust::receiver_decide(t, &self.cfg.scheme),
                Err(_) => (Decision::Reject, self.cfg.scheme.eval_timer),
            };
        self.obus[idx].latency.get_or_insert(decision.1);
        match decision.0 {
            Decision::Accept => self.accept(id, eval.first_msg),
            Decision::Reject => {
                self.obus[idx].beliefs.insert(event_id, Belief::Rejected);
            }
        }
    }

    fn accept(&mut self, id: VehicleId, m: Message) {
        let idx = id as usize;
        let event_id = m.event.as_ref().map_or(m.msg_id, |e| e.id);
        if m.kind == MessageKind::Diversion {
            mobility::maybe_reroute(&mut self.vehicles[idx], &self.graph);
        }
        self.obus[idx]
            .beliefs
            .insert(event_id, Belief::Accepted(Box::new(m.clone())));
        self.relay_from(id, &m);
    }

    fn relay_from(&mut self, id: VehicleId, m: &Message) {
        let me = EntityId::Vehicle(id);
        if let Some(copy) = comms::relay(me, m, &mut self.obus[id as usize].relayed) {
            self.transmit(me, copy);
        }
    }

    fn on_corrective(&mut self, id: VehicleId, event_id: u64, m: &Message) {
        let idx = id as usize;
        let origin = match self.obus[idx].beliefs.get(&event_id) {
            Some(Belief::Accepted(orig)) => Some(orig.origin),
            Some(Belief::Evaluating(e)) => Some(e.origin),
            _ => None,
        };
        if let Some(o) = origin {
            self.obus[idx].trust.record_evidence(o, 0.0);
        }
        self.obus[idx].beliefs.insert(event_id, Belief::Retracted);
        if !self.obus[idx].corrected {
            self.obus[idx].corrected = true;
            if !self.vehicles[idx].passed_junction {
                self.corrective_prejunction += 1;
            }
        }
        let me = EntityId::Vehicle(id);
        if let Some(copy) = comms::relay(me, m, &mut self.obus[idx].relayed) {
            self.transmit(me, copy);
        }
    }

    // ---- announcements and disputes ----

    fn announce(&mut self, id: VehicleId) {
        let Some(script) = self.announce.filter(|a| a.vehicle == id) else {
            return;
        };
        let now = self.now();
        let idx = id as usize;
        let started = *self.script.announce_started.get_or_insert(now);
        let active = self.vehicles[idx].on_road()
            && match script.lifetime {
                Some(l) => now <= started + l + TIME_EPS,
                None => {
                    self.vehicles[idx].state == VehicleState::Halted || self.script.event.is_none()
                }
            };
        if !active {
            return;
        }
        let _ = self.events.schedule(
            now,
            now + script.interval,
            EventPayload::Announcement { vehicle: id },
        );

        let me = EntityId::Vehicle(id);
        if trust::gate_announcement(&self.registry.get(me), &self.cfg.scheme) == Gate::Deny {
            self.suppressed += 1;
            return;
        }
        let event = match &self.script.event {
            Some(e) => e.clone(),
            None => {
                let pos = self.vehicles[idx].pos;
                #[cfg(test)]
                let script = AnnounceScript {
                    truthful: script.truthful != self.invert_truth,
                    ..script
                };
                let e = EventRecord::new(
                    self.next_msg_id + 1_000_000,
                    EventKind::Diversion,
                    self.graph.route(pos.route)[pos.edge_index],
                    pos.offset,
                    now,
                    script.truthful,
                );
                self.script.event = Some(e.clone());
                e
            }
        };
        let mut m = Message::new(self.fresh_msg_id(), MessageKind::Diversion, me, now);
        m.event = Some(event.clone());
        m.hops_remaining = self.cfg.hop_budget;
        if self.vehicles[idx].role == Role::Official {
            m.priority = Priority::High;
        }
        let obu = &mut self.obus[idx];
        obu.processed.insert(m.msg_id);
        obu.relayed.insert(m.msg_id);
        obu.sensed.insert(event.id);
        obu.beliefs
            .insert(event.id, Belief::Accepted(Box::new(m.clone())));
        self.transmit(me, m);
    }

    /// Lets a vehicle that believes an event check it on passing the spot.
    fn sense_events(&mut self, id: VehicleId) {
        let idx = id as usize;
        let v = &self.vehicles[idx];
        if !v.on_road() {
            return;
        }
        let here = self.graph.route(v.route())[v.pos.edge_index];
        let offset = v.pos.offset;
        let due: Vec<Message> = self.obus[idx]
            .beliefs
            .iter()
            .filter_map(|(eid, b)| match b {
                Belief::Accepted(m) if !self.obus[idx].sensed.contains(eid) => {
                    let e = m.event.as_ref()?;
                    (e.location == here && offset >= e.offset).then(|| (**m).clone())
                }
                _ => None,
            })
            .collect();
        for m in due {
            let Some(event) = m.event.as_ref() else {
                continue;
            };
            let Some(obs) = trust::sense_ground_truth(&self.vehicles[idx], &self.graph, event)
            else {
                continue;
            };
            let obu = &mut self.obus[idx];
            obu.sensed.insert(event.id);
            let consistent = obs == Observation::Present;
            obu.trust
                .record_evidence(m.origin, if consistent { 1.0 } else { 0.0 });
            if self.cfg.scheme.scheme != Scheme::SenderSide {
                continue;
            }
            let me = EntityId::Vehicle(id);
            let placeholder = EntityId::Rsu(0);
            let msg_id = self.next_msg_id + 1;
            let obu = &mut self.obus[idx];
            if let Some(r) = trust::file_attack_report(
                me,
                &m,
                obs,
                placeholder,
                &mut obu.filed,
                msg_id,
                self.clock.now(),
            ) {
                self.next_msg_id = msg_id;
                obu.outgoing_reports.push(r);
            }
        }
    }

    fn deliver_to_rsu(&mut self, rsu: u32, m: Message) {
        let now = self.now();
        let me = EntityId::Rsu(rsu);
        match (m.kind, &m.body) {
            (MessageKind::TrustQuery, Body::TrustQuery { subject, event_id }) => {
                let score = self.registry.score(*subject);
                self.respond(me, m.sender, *subject, *event_id, score);
            }
            (
                MessageKind::AttackReport,
                Body::AttackReport {
                    accused,
                    observation,
                    ..
                },
            ) => {
                let Some(event) = m.event.clone() else { return };
                if self.closed_disputes.contains(&event.id) {
                    return;
                }
                let cfg = self.cfg.scheme.clone();
                let opened = !self.disputes.contains_key(&event.id);
                let dispute = self
                    .disputes
                    .entry(event.id)
                    .or_insert_with(|| Dispute::new(event.clone(), *accused, now, &cfg));
                let deadline = dispute.deadline;
                dispute.add(m.origin, self.registry.score(m.origin), *observation, &cfg);
                if opened {
                    let _ = self.events.schedule(
                        now,
                        deadline,
                        EventPayload::AdjudicationTimer { event_id: event.id },
                    );
                }
                self.check_dispute_at(event.id, rsu);
            }
            _ => {}
        }
    }

    fn check_dispute(&mut self, event_id: u64) {
        self.check_dispute_at(event_id, 0);
    }

    fn check_dispute_at(&mut self, event_id: u64, rsu: u32) {
        let now = self.now();
        let Some(d) = self.disputes.get(&event_id) else {
            return;
        };
        let Some(verdict) = d.verdict(now, &self.cfg.scheme) else {
            return;
        };
        let d = self.disputes.remove(&event_id).expect("dispute present");
        self.closed_disputes.insert(event_id);
        self.resolve(d, verdict, rsu);
    }

    fn resolve(&mut self, d: Dispute, verdict: Verdict, rsu: u32) {
        let now = self.now();
        let cfg = self.cfg.scheme.clone();
        let severity = Severity::of(d.event.kind);
        self.rsus[rsu as usize]
            .event_log
            .push((d.event.clone(), verdict));
        self.verdicts.push(VerdictRecord {
            event_id: d.event.id,
            accused: d.accused,
            decided_at: now,
            outcome: verdict.outcome,
            confidence: verdict.confidence,
            reports: d.reports.len(),
        });
        if verdict.outcome == Outcome::Inconclusive {
            return;
        }
        trust::apply_reward_punishment(
            self.registry.entry(d.accused),
            &verdict,
            Party::Sender,
            severity,
            &cfg,
        );
        for (reporter, _) in &d.reports {
            trust::apply_reward_punishment(
                self.registry.entry(*reporter),
                &verdict,
                Party::Reporter,
                severity,
                &cfg,
            );
        }
        let accused_score = self.registry.score(d.accused);
        for r in 0..self.rsus.len() {
            let from = EntityId::Rsu(r as u32);
            if verdict.outcome == Outcome::Refuted {
                let mut c = Message::new(self.fresh_msg_id(), MessageKind::Corrective, from, now);
                c.event = Some(d.event.clone());
                c.hops_remaining = self.cfg.hop_budget;
                c.priority = Priority::High;
                c.body = Body::Corrective {
                    event_id: d.event.id,
                    verdict,
                };
                self.transmit(from, c);
            }
            let mut u = Message::new(self.fresh_msg_id(), MessageKind::TrustUpdate, from, now);
            u.body = Body::TrustUpdate {
                subject: d.accused,
                score: accused_score,
            };
            self.transmit(from, u);
        }
    }

    pub fn report(&self) -> MetricsReport {
        let vehicles: Vec<VehicleRecord> = self
            .vehicles
            .iter()
            .zip(&self.obus)
            .map(|(v, o)| VehicleRecord {
                id: v.id,
                inserted_at: (v.state != VehicleState::QueuedForInsertion).then_some(v.inserted_at),
                finished_at: v.finished_at,
                route: v.route(),
                latency: o.latency,
            })
            .collect();
        let incomplete = vehicles.iter().any(|v| v.finished_at.is_none());
        MetricsReport {
            condition: self.cfg.condition,
            n_vehicles: self.cfg.n_vehicles,
            scheme: self.cfg.scheme.scheme,
            seed: self.cfg.seed,
            vehicles,
            counts: self.counts,
            suppressed: self.suppressed,
            verdicts: self.verdicts.clone(),
            corrective_prejunction: self.corrective_prejunction,
            min_gap: self.min_gap,
            incomplete,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::make_condition;

    fn decisions(w: &World) -> Vec<(usize, u64, &'static str, Option<f64>)> {
        let mut out = Vec::new();
        for (i, o) in w.obus.iter().enumerate() {
            for (eid, b) in &o.beliefs {
                let tag = match b {
                    Belief::Evaluating(_) => "evaluating",
                    Belief::Accepted(_) => "accepted",
                    Belief::Rejected => "rejected",
                    Belief::Retracted => "retracted",
                };
                out.push((i, *eid, tag, o.latency));
            }
        }
        out
    }

    #[test]
    fn ground_truth_does_not_steer_decisions_before_sensing() {
        for scheme in [Scheme::ReceiverSide, Scheme::SenderSide] {
            let cfg = make_condition(crate::harness::Condition::FalseAnnouncement, 30, scheme, 1);
            let mut a = World::new(&cfg).unwrap();
            let mut b = World::new(&cfg).unwrap();
            b.invert_truth = true;
            let announcer = cfg.announcement().unwrap().vehicle as usize;
            let sensed = |w: &World| {
                w.obus
                    .iter()
                    .enumerate()
                    .any(|(i, o)| i != announcer && !o.sensed.is_empty())
            };
            let decided = loop {
                a.step();
                b.step();
                let da = decisions(&a);
                assert_eq!(da, decisions(&b), "{} at {:.1}", scheme.as_str(), a.now());
                if sensed(&a) || sensed(&b) || a.now() >= cfg.duration {
                    break da
                        .iter()
                        .filter(|d| d.0 != announcer && d.2 != "evaluating")
                        .count();
                }
            };
            assert!(
                decided > 0,
                "{}: no decision before sensing",
                scheme.as_str()
            );
            assert_ne!(
                a.scripted_event().unwrap().ground_truth(),
                b.scripted_event().unwrap().ground_truth()
            );
        }
    }

    #[test]
    fn one_short_announcement_is_relayed_at_most_once_per_vehicle() {
        let mut cfg = make_condition(
            crate::harness::Condition::FalseAnnouncement,
            30,
            Scheme::None,
            1,
        );
        cfg.false_claim_lifetime = 0.5;
        let mut w = World::new(&cfg).unwrap();
        w.run_to_end();
        let copies = w.counts().get(MessageKind::Diversion);
        assert!(
            copies >= 2 && copies <= u64::from(cfg.n_vehicles),
            "{copies}"
        );
        for o in &w.obus {
            assert!(o.relayed.len() <= 1);
        }
    }
}

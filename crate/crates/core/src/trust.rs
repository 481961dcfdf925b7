//! Trust schemes: the no-trust baseline, receiver-side evaluation, and
//! sender-side gating with RSU adjudication and reward/punishment.

use std::collections::{BTreeMap, BTreeSet};

use crate::comms::{Body, EntityId, EventKind, EventRecord, Message, MessageKind};
use crate::error::SimError;
use crate::mobility::Vehicle;
use crate::road::RoadGraph;

pub const INITIAL_TRUST: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    None,
    ReceiverSide,
    SenderSide,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::None, Scheme::ReceiverSide, Scheme::SenderSide];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::None => "none",
            Scheme::ReceiverSide => "receiver_side",
            Scheme::SenderSide => "sender_side",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub w_direct: f64,
    pub w_indirect: f64,
    pub w_rsu: f64,
    pub accept_threshold: f64,
    pub announce_threshold: f64,
    pub blacklist_floor: f64,
    /// Receiver-side evaluation window in seconds.
    pub eval_timer: f64,
    pub quorum: usize,
    /// How long an RSU waits for a quorum after the first report.
    pub adjudication_timeout: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            scheme: Scheme::None,
            w_direct: 0.5,
            w_indirect: 0.3,
            w_rsu: 0.2,
            accept_threshold: 0.5,
            announce_threshold: 0.5,
            blacklist_floor: 0.2,
            eval_timer: 5.0,
            quorum: 3,
            adjudication_timeout: 30.0,
        }
    }
}

impl SchemeConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        SchemeConfig {
            scheme,
            ..SchemeConfig::default()
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let w = [self.w_direct, self.w_indirect, self.w_rsu];
        if w.iter().any(|x| *x < 0.0 || !x.is_finite()) {
            out.push("trust weights must be non-negative".to_string());
        } else if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            out.push("trust weights must sum to 1".to_string());
        }
        if !(self.blacklist_floor < self.announce_threshold) {
            out.push("blacklist_floor must be below announce_threshold".to_string());
        }
        for (name, v) in [
            ("accept_threshold", self.accept_threshold),
            ("announce_threshold", self.announce_threshold),
            ("blacklist_floor", self.blacklist_floor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.eval_timer >= 0.0) {
            out.push("eval_timer must be non-negative".to_string());
        }
        if self.quorum == 0 {
            out.push("quorum must be at least 1".to_string());
        }
        if !(self.adjudication_timeout > 0.0) {
            out.push("adjudication_timeout must be positive".to_string());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustState {
    score: f64,
    pub direct_evidence: BTreeMap<EntityId, f64>,
    /// Per event id: (confirming, denying) reports seen.
    pub seen_reports: BTreeMap<u64, (u32, u32)>,
    pub blacklisted: bool,
}

impl Default for TrustState {
    fn default() -> Self {
        TrustState::with_score(INITIAL_TRUST)
    }
}

impl TrustState {
    pub fn with_score(score: f64) -> Self {
        TrustState {
            score: score.clamp(0.0, 1.0),
            direct_evidence: BTreeMap::new(),
            seen_reports: BTreeMap::new(),
            blacklisted: false,
        }
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn set_score(&mut self, s: f64) {
        self.score = s.clamp(0.0, 1.0);
    }

    pub fn record_evidence(&mut self, about: EntityId, value: f64) {
        self.direct_evidence.insert(about, value.clamp(0.0, 1.0));
    }
}

/// The authority's trust table, shared by every RSU.
#[derive(Debug, Clone, Default)]
pub struct TrustRegistry {
    entries: BTreeMap<EntityId, TrustState>,
}

impl TrustRegistry {
    pub fn get(&self, id: EntityId) -> TrustState {
        self.entries.get(&id).cloned().unwrap_or_default()
    }

    pub fn score(&self, id: EntityId) -> f64 {
        self.entries
            .get(&id)
            .map_or(INITIAL_TRUST, TrustState::score)
    }

    pub fn entry(&mut self, id: EntityId) -> &mut TrustState {
        self.entries.entry(id).or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EntityId, &TrustState)> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Allow,
    Deny,
}

/// Whether `sender` may put an announcement on the air.
pub fn gate_announcement(sender: &TrustState, cfg: &SchemeConfig) -> Gate {
    if cfg.scheme != Scheme::SenderSide {
        return Gate::Allow;
    }
    if sender.blacklisted || sender.score() < cfg.announce_threshold {
        Gate::Deny
    } else {
        Gate::Allow
    }
}

/// Weighted mean of the trust inputs that are present, renormalized
/// over their weights.
pub fn aggregate_trust(
    direct: Option<f64>,
    indirect: &[f64],
    rsu: Option<f64>,
    cfg: &SchemeConfig,
) -> Result<f64, SimError> {
    let mut num = 0.0;
    let mut den = 0.0;
    if let Some(d) = direct {
        num += cfg.w_direct * d;
        den += cfg.w_direct;
    }
    if !indirect.is_empty() {
        let mean = indirect.iter().sum::<f64>() / indirect.len() as f64;
        num += cfg.w_indirect * mean;
        den += cfg.w_indirect;
    }
    if let Some(r) = rsu {
        num += cfg.w_rsu * r;
        den += cfg.w_rsu;
    }
    if direct.is_none() && indirect.is_empty() && rsu.is_none() {
        return Err(SimError::NoTrustInput);
    }
    if den == 0.0 {
        // Every present input carries zero weight.
        return Err(SimError::NoTrustInput);
    }
    Ok((num / den).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

/// Receiver's verdict on an announcement and how long it took to reach it.
///
/// Only the receiver-side scheme waits; the other schemes believe the
/// announcement on arrival.
pub fn receiver_decide(trust: f64, cfg: &SchemeConfig) -> (Decision, f64) {
    match cfg.scheme {
        Scheme::ReceiverSide => {
            let d = if trust >= cfg.accept_threshold {
                Decision::Accept
            } else {
                Decision::Reject
            };
            (d, cfg.eval_timer)
        }
        Scheme::SenderSide | Scheme::None => (Decision::Accept, 0.0),
    }
}

/// One in-flight receiver-side evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub event: EventRecord,
    pub origin: EntityId,
    pub first_msg: Message,
    pub started_at: f64,
    pub indirect: Vec<f64>,
    pub rsu: Option<f64>,
}

/// Queries a receiver-side evaluation sends: one per neighbor, one to the RSU.
pub fn receiver_on_message(
    receiver: EntityId,
    m: &Message,
    neighbors: &[EntityId],
    rsu: Option<EntityId>,
    mut next_id: impl FnMut() -> u64,
    now: f64,
) -> Vec<Message> {
    let event_id = m.event.as_ref().map_or(m.msg_id, |e| e.id);
    neighbors
        .iter()
        .copied()
        .chain(rsu)
        .map(|to| {
            let mut q = Message::new(next_id(), MessageKind::TrustQuery, receiver, now);
            q.dest = Some(to);
            q.body = Body::TrustQuery {
                subject: m.origin,
                event_id,
            };
            q
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Observation {
    Present,
    Absent,
}

/// What a vehicle on the event's edge sees there.
pub fn sense_ground_truth(v: &Vehicle, g: &RoadGraph, e: &EventRecord) -> Option<Observation> {
    if !v.on_road() || g.route(v.route())[v.pos.edge_index] != e.location {
        return None;
    }
    Some(if e.ground_truth() {
        Observation::Present
    } else {
        Observation::Absent
    })
}

/// Builds an attack report when an observation contradicts a claimed event.
///
/// `filed` remembers the announcement ids this vehicle already reported.
pub fn file_attack_report(
    reporter: EntityId,
    m: &Message,
    obs: Observation,
    rsu: EntityId,
    filed: &mut BTreeSet<u64>,
    msg_id: u64,
    now: f64,
) -> Option<Message> {
    let claim = m.event.as_ref()?;
    let claims_present = claim.kind != EventKind::Resolution;
    let contradicts = match obs {
        Observation::Present => !claims_present,
        Observation::Absent => claims_present,
    };
    if !contradicts || !filed.insert(claim.id) {
        return None;
    }
    let mut r = Message::new(msg_id, MessageKind::AttackReport, reporter, now);
    r.dest = Some(rsu);
    r.event = Some(claim.clone());
    r.body = Body::AttackReport {
        msg_ref: m.msg_id,
        accused: m.origin,
        observation: obs,
    };
    Some(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Confirmed,
    Refuted,
    Inconclusive,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Confirmed => "confirmed",
            Outcome::Refuted => "refuted",
            Outcome::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub event_id: u64,
    pub outcome: Outcome,
    pub confidence: f64,
}

/// Majority rule over the first `quorum` observations.
///
/// Returns `None` while the quorum is short and the deadline has not
/// passed. A short quorum at the deadline, or a tie, is inconclusive.
pub fn adjudicate(
    event_id: u64,
    obs: &[Observation],
    quorum: usize,
    timed_out: bool,
) -> Option<Verdict> {
    if obs.len() < quorum {
        return timed_out.then_some(Verdict {
            event_id,
            outcome: Outcome::Inconclusive,
            confidence: 0.0,
        });
    }
    let window = &obs[..quorum];
    let present = window
        .iter()
        .filter(|o| **o == Observation::Present)
        .count();
    let absent = quorum - present;
    let (outcome, majority) = match present.cmp(&absent) {
        std::cmp::Ordering::Greater => (Outcome::Confirmed, present),
        std::cmp::Ordering::Less => (Outcome::Refuted, absent),
        std::cmp::Ordering::Equal => (Outcome::Inconclusive, 0),
    };
    let confidence = if outcome == Outcome::Inconclusive {
        0.0
    } else {
        majority as f64 / quorum as f64
    };
    Some(Verdict {
        event_id,
        outcome,
        confidence,
    })
}

/// An RSU's open dispute over one announced event.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispute {
    pub event: EventRecord,
    pub accused: EntityId,
    pub reports: Vec<(EntityId, Observation)>,
    pub deadline: f64,
}

impl Dispute {
    pub fn new(event: EventRecord, accused: EntityId, now: f64, cfg: &SchemeConfig) -> Self {
        Dispute {
            event,
            accused,
            reports: Vec::new(),
            deadline: now + cfg.adjudication_timeout,
        }
    }

    /// Adds a report if the reporter is trusted and has not reported yet.
    pub fn add(
        &mut self,
        reporter: EntityId,
        reporter_score: f64,
        obs: Observation,
        cfg: &SchemeConfig,
    ) -> bool {
        if reporter_score < cfg.accept_threshold
            || reporter == self.accused
            || self.reports.iter().any(|(r, _)| *r == reporter)
        {
            return false;
        }
        self.reports.push((reporter, obs));
        true
    }

    pub fn verdict(&self, now: f64, cfg: &SchemeConfig) -> Option<Verdict> {
        let obs: Vec<Observation> = self.reports.iter().map(|(_, o)| *o).collect();
        adjudicate(self.event.id, &obs, cfg.quorum, now >= self.deadline - 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Low,
    Medium,
    High,
}

impl Severity {
    pub fn of(kind: EventKind) -> Severity {
        match kind {
            EventKind::Diversion | EventKind::Accident => Severity::High,
            EventKind::Resolution => Severity::Low,
        }
    }

    fn reward(self) -> f64 {
        match self {
            Severity::Low => 0.05,
            Severity::Medium => 0.08,
            Severity::High => 0.10,
        }
    }

    fn punishment(self) -> f64 {
        match self {
            Severity::Low => 0.15,
            Severity::Medium => 0.30,
            Severity::High => 0.50,
        }
    }
}

/// Which side of a dispute an entity was on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Sender,
    Reporter,
}

/// Score change for `party` under `verdict`; `past` is the prior score.
pub fn trust_delta(verdict: &Verdict, party: Party, severity: Severity, past: f64) -> f64 {
    let vindicated = match (verdict.outcome, party) {
        (Outcome::Inconclusive, _) => return 0.0,
        (Outcome::Confirmed, Party::Sender) | (Outcome::Refuted, Party::Reporter) => true,
        (Outcome::Refuted, Party::Sender) | (Outcome::Confirmed, Party::Reporter) => false,
    };
    if vindicated {
        severity.reward() * verdict.confidence
    } else {
        (-severity.punishment() * verdict.confidence * (1.5 - past)).clamp(-0.5, 0.0)
    }
}

/// Applies a verdict to one party's trust and updates its blacklist flag.
pub fn apply_reward_punishment(
    t: &mut TrustState,
    verdict: &Verdict,
    party: Party,
    severity: Severity,
    cfg: &SchemeConfig,
) {
    if verdict.outcome == Outcome::Inconclusive {
        return;
    }
    let delta = trust_delta(verdict, party, severity, t.score());
    t.set_score(t.score() + delta);
    if t.score() < cfg.blacklist_floor {
        t.blacklisted = true;
    } else if delta > 0.0 {
        t.blacklisted = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comms::EventKind;
    use crate::mobility::{Role, VehicleState};
    use crate::road::{EdgeId, Geometry};

    fn cfg(scheme: Scheme) -> SchemeConfig {
        SchemeConfig::with_scheme(scheme)
    }

    #[test]
    fn gate_thresholds() {
        let c = cfg(Scheme::SenderSide);
        assert_eq!(
            gate_announcement(&TrustState::with_score(0.7), &c),
            Gate::Allow
        );
        assert_eq!(
            gate_announcement(&TrustState::with_score(0.4), &c),
            Gate::Deny
        );
        assert_eq!(
            gate_announcement(&TrustState::with_score(0.5), &c),
            Gate::Allow
        );
        assert_eq!(
            gate_announcement(&TrustState::with_score(0.0), &cfg(Scheme::ReceiverSide)),
            Gate::Allow
        );
    }

    #[test]
    fn aggregate_examples() {
        let c = SchemeConfig::default();
        let t = aggregate_trust(Some(0.8), &[0.6], Some(0.7), &c).unwrap();
        assert!((t - 0.72).abs() < 1e-12);
        assert!((aggregate_trust(Some(0.9), &[], None, &c).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(
            aggregate_trust(Some(0.0), &[0.0], Some(0.0), &c).unwrap(),
            0.0
        );
        assert!(matches!(
            aggregate_trust(None, &[], None, &c),
            Err(SimError::NoTrustInput)
        ));
    }

    #[test]
    fn decisions_and_latency() {
        let rs = cfg(Scheme::ReceiverSide);
        assert_eq!(receiver_decide(0.72, &rs), (Decision::Accept, 5.0));
        assert_eq!(receiver_decide(0.3, &rs).0, Decision::Reject);
        assert_eq!(
            receiver_decide(0.0, &cfg(Scheme::SenderSide)),
            (Decision::Accept, 0.0)
        );
    }

    #[test]
    fn queries_go_to_neighbors_and_rsu() {
        let m = Message::new(1, MessageKind::Diversion, EntityId::Vehicle(0), 0.0);
        let mut next = 100;
        let qs = receiver_on_message(
            EntityId::Vehicle(5),
            &m,
            &[
                EntityId::Vehicle(1),
                EntityId::Vehicle(2),
                EntityId::Vehicle(3),
                EntityId::Vehicle(4),
            ],
            Some(EntityId::Rsu(0)),
            || {
                next += 1;
                next
            },
            1.0,
        );
        assert_eq!(qs.len(), 5);
        assert!(qs.iter().all(|q| q.kind == MessageKind::TrustQuery));
        assert_eq!(qs[4].dest, Some(EntityId::Rsu(0)));
        assert!(receiver_on_message(EntityId::Vehicle(5), &m, &[], None, || 0, 1.0).is_empty());
    }

    fn on_edge(edge_index: usize) -> Vehicle {
        let mut v = Vehicle::new(3, Role::Regular);
        v.state = VehicleState::Driving;
        v.pos.edge_index = edge_index;
        v
    }

    #[test]
    fn sensing_requires_presence() {
        let g = RoadGraph::reference(&Geometry::default()).unwrap();
        let real = EventRecord::new(1, EventKind::Diversion, EdgeId(1), 50.0, 0.0, true);
        let fake = real.clone().with_ground_truth(false);
        assert_eq!(
            sense_ground_truth(&on_edge(1), &g, &real),
            Some(Observation::Present)
        );
        assert_eq!(
            sense_ground_truth(&on_edge(1), &g, &fake),
            Some(Observation::Absent)
        );
        assert_eq!(sense_ground_truth(&on_edge(0), &g, &real), None);
    }

    #[test]
    fn attack_report_only_on_contradiction() {
        let mut m = Message::new(4, MessageKind::Diversion, EntityId::Vehicle(0), 0.0);
        m.event = Some(EventRecord::new(
            1,
            EventKind::Diversion,
            EdgeId(1),
            50.0,
            0.0,
            false,
        ));
        let mut filed = BTreeSet::new();
        let me = EntityId::Vehicle(3);
        let rsu = EntityId::Rsu(1);
        assert!(
            file_attack_report(me, &m, Observation::Present, rsu, &mut filed, 9, 1.0).is_none()
        );
        let r = file_attack_report(me, &m, Observation::Absent, rsu, &mut filed, 10, 1.0).unwrap();
        assert_eq!(r.kind, MessageKind::AttackReport);
        assert_eq!(r.dest, Some(rsu));
        assert_eq!(
            r.body,
            Body::AttackReport {
                msg_ref: 4,
                accused: EntityId::Vehicle(0),
                observation: Observation::Absent
            }
        );
        assert!(
            file_attack_report(me, &m, Observation::Absent, rsu, &mut filed, 11, 1.0).is_none()
        );
    }

    #[test]
    fn majority_verdicts() {
        use Observation::*;
        let v = adjudicate(1, &[Absent, Absent, Present], 3, false).unwrap();
        assert_eq!(v.outcome, Outcome::Refuted);
        assert!((v.confidence - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(adjudicate(1, &[Absent], 3, false), None);
        assert_eq!(
            adjudicate(1, &[Absent], 3, true).unwrap().outcome,
            Outcome::Inconclusive
        );
        let v = adjudicate(1, &[Present, Present, Present], 3, false).unwrap();
        assert_eq!((v.outcome, v.confidence), (Outcome::Confirmed, 1.0));
    }

    #[test]
    fn dispute_filters_reporters() {
        let c = SchemeConfig::default();
        let e = EventRecord::new(1, EventKind::Diversion, EdgeId(1), 0.0, 0.0, false);
        let mut d = Dispute::new(e, EntityId::Vehicle(0), 10.0, &c);
        assert!(!d.add(EntityId::Vehicle(0), 0.9, Observation::Absent, &c));
        assert!(!d.add(EntityId::Vehicle(1), 0.4, Observation::Absent, &c));
        assert!(d.add(EntityId::Vehicle(1), 0.5, Observation::Absent, &c));
        assert!(!d.add(EntityId::Vehicle(1), 0.5, Observation::Absent, &c));
        assert_eq!(d.verdict(11.0, &c), None);
        assert_eq!(d.verdict(40.0, &c).unwrap().outcome, Outcome::Inconclusive);
    }

    #[test]
    fn reward_punishment_table() {
        let c = SchemeConfig::default();
        let refuted = Verdict {
            event_id: 1,
            outcome: Outcome::Refuted,
            confidence: 1.0,
        };
        let mut s = TrustState::default();
        apply_reward_punishment(&mut s, &refuted, Party::Sender, Severity::High, &c);
        assert_eq!(s.score(), 0.0);
        assert!(s.blacklisted);
        assert_eq!(gate_announcement(&s, &cfg(Scheme::SenderSide)), Gate::Deny);

        let confirmed = Verdict {
            event_id: 1,
            outcome: Outcome::Confirmed,
            confidence: 1.0,
        };
        let mut s = TrustState::default();
        apply_reward_punishment(&mut s, &confirmed, Party::Sender, Severity::Low, &c);
        assert!((s.score() - 0.55).abs() < 1e-12);

        let zero = Verdict {
            confidence: 0.0,
            ..confirmed
        };
        let mut s = TrustState::default();
        apply_reward_punishment(&mut s, &zero, Party::Sender, Severity::High, &c);
        assert_eq!(s.score(), 0.5);

        // Reporters gain when the accused sender is refuted.
        let mut r = TrustState::default();
        apply_reward_punishment(&mut r, &refuted, Party::Reporter, Severity::High, &c);
        assert!((r.score() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn blacklist_clears_only_on_vindication() {
        let c = cfg(Scheme::SenderSide);
        let mut s = TrustState::with_score(0.1);
        s.blacklisted = true;
        let refuted = Verdict {
            event_id: 1,
            outcome: Outcome::Refuted,
            confidence: 1.0,
        };
        apply_reward_punishment(&mut s, &refuted, Party::Sender, Severity::Low, &c);
        assert!(s.blacklisted);
        let confirmed = Verdict {
            event_id: 2,
            outcome: Outcome::Confirmed,
            confidence: 1.0,
        };
        for _ in 0..3 {
            apply_reward_punishment(&mut s, &confirmed, Party::Sender, Severity::High, &c);
        }
        assert!(s.score() >= c.blacklist_floor);
        assert!(!s.blacklisted);
    }

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::default().problems().is_empty());
        let bad = SchemeConfig {
            w_rsu: 0.5,
            ..SchemeConfig::default()
        };
        assert_eq!(bad.problems().len(), 1);
        let bad = SchemeConfig {
            blacklist_floor: 0.6,
            ..SchemeConfig::default()
        };
        assert!(!bad.problems().is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn verdict() -> impl Strategy<Value = (Verdict, Party, Severity)> {
            (
                prop_oneof![
                    Just(Outcome::Confirmed),
                    Just(Outcome::Refuted),
                    Just(Outcome::Inconclusive)
                ],
                0.0f64..=1.0,
                prop_oneof![Just(Party::Sender), Just(Party::Reporter)],
                prop_oneof![
                    Just(Severity::Low),
                    Just(Severity::Medium),
                    Just(Severity::High)
                ],
            )
                .prop_map(|(outcome, confidence, p, s)| {
                    (
                        Verdict {
                            event_id: 0,
                            outcome,
                            confidence,
                        },
                        p,
                        s,
                    )
                })
        }

        proptest! {
            #[test]
            fn scores_stay_in_unit_interval(
                start in 0.0f64..=1.0,
                seq in proptest::collection::vec(verdict(), 0..200),
            ) {
                let c = SchemeConfig::with_scheme(Scheme::SenderSide);
                let mut t = TrustState::with_score(start);
                for (v, p, s) in &seq {
                    apply_reward_punishment(&mut t, v, *p, *s, &c);
                    prop_assert!((0.0..=1.0).contains(&t.score()));
                }
            }

            #[test]
            fn blacklist_is_absorbing_without_vindication(
                seq in proptest::collection::vec(verdict(), 0..100),
            ) {
                let c = SchemeConfig::with_scheme(Scheme::SenderSide);
                let mut t = TrustState::with_score(0.0);
                t.blacklisted = true;
                for (v, p, s) in &seq {
                    let vindicated = trust_delta(v, *p, *s, t.score()) > 0.0;
                    apply_reward_punishment(&mut t, v, *p, *s, &c);
                    if !vindicated && t.blacklisted {
                        prop_assert_eq!(gate_announcement(&t, &c), Gate::Deny);
                    }
                    if t.score() < c.blacklist_floor {
                        prop_assert!(t.blacklisted);
                    }
                }
            }

            #[test]
            fn aggregate_is_bounded(
                d in proptest::option::of(0.0f64..=1.0),
                ind in proptest::collection::vec(0.0f64..=1.0, 0..6),
                r in proptest::option::of(0.0f64..=1.0),
            ) {
                let c = SchemeConfig::default();
                match aggregate_trust(d, &ind, r, &c) {
                    Ok(t) => prop_assert!((0.0..=1.0).contains(&t)),
                    Err(_) => prop_assert!(d.is_none() && ind.is_empty() && r.is_none()),
                }
            }
        }
    }
}

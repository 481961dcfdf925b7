//! Scenario description and its section-based `key = value` file format.
//!
//! ```text
//! [scenario]
//! condition = trustworthy_announcement
//! n_vehicles = 30
//!
//! [trust]
//! scheme = sender_side
//! ```
//!
//! Every key and its default is listed in [`KEYS`].

use std::collections::BTreeSet;

use crate::error::SimError;
use crate::mobility::{FollowParams, VehicleId};
use crate::road::{Geometry, RoadGraph};
use crate::trust::{Scheme, SchemeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    NoEvent,
    FalseAnnouncement,
    UnannouncedEvent,
    TrustworthyAnnouncement,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::NoEvent,
        Condition::FalseAnnouncement,
        Condition::UnannouncedEvent,
        Condition::TrustworthyAnnouncement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::NoEvent => "no_event",
            Condition::FalseAnnouncement => "false_announcement",
            Condition::UnannouncedEvent => "unannounced_event",
            Condition::TrustworthyAnnouncement => "trustworthy_announcement",
        }
    }

    pub fn parse(s: &str) -> Option<Condition> {
        Condition::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

/// The front vehicle stopping on the primary branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaltScript {
    pub vehicle: VehicleId,
    /// Distance from the origin along the primary route.
    pub at: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnnounceTrigger {
    /// When the announcer passes this distance along its route.
    AtPosition(f64),
    /// This many seconds after the halt begins.
    AfterHalt(f64),
}

/// A diversion announcement and how long its originator keeps repeating it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnounceScript {
    pub vehicle: VehicleId,
    pub truthful: bool,
    pub trigger: AnnounceTrigger,
    pub interval: f64,
    /// Repetition window after the first transmission. `None` repeats for
    /// as long as the announcer stays halted.
    pub lifetime: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub duration: f64,
    pub step: f64,
    pub n_vehicles: u32,
    pub insertion_gap: f64,
    /// Uniform random delay added to each scheduled insertion.
    pub depart_jitter: f64,
    pub condition: Condition,
    pub scheme: SchemeConfig,
    pub geometry: Geometry,
    pub follow: FollowParams,
    pub halt_duration: f64,
    /// Where the front vehicle stops or lies, measured past the junction.
    pub halt_position: f64,
    pub announce_offset: f64,
    pub announce_interval: f64,
    /// Repetition window of a false announcement.
    pub false_claim_lifetime: f64,
    pub radio_range: f64,
    pub beacon_period: f64,
    pub hop_budget: u32,
    pub rsu_range: f64,
    /// `None` places one RSU at the junction and one at the event point.
    pub rsu_positions: Option<Vec<(f64, f64)>>,
    pub official: Vec<VehicleId>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            duration: 300.0,
            step: 0.1,
            n_vehicles: 10,
            insertion_gap: 1.0,
            depart_jitter: 0.0,
            condition: Condition::NoEvent,
            scheme: SchemeConfig::default(),
            geometry: Geometry::default(),
            follow: FollowParams::default(),
            halt_duration: 120.0,
            halt_position: 20.0,
            announce_offset: 0.0,
            announce_interval: 1.0,
            false_claim_lifetime: 40.0,
            radio_range: 300.0,
            beacon_period: 1.0,
            hop_budget: 5,
            rsu_range: 300.0,
            rsu_positions: None,
            official: Vec::new(),
            seed: 1,
        }
    }
}

/// Lateral distance of the default RSUs from the primary road.
const RSU_SETBACK: f64 = 10.0;

impl ScenarioConfig {
    pub fn event_point(&self) -> f64 {
        self.geometry.common_prefix + self.halt_position
    }

    pub fn halt(&self) -> Option<HaltScript> {
        match self.condition {
            Condition::UnannouncedEvent | Condition::TrustworthyAnnouncement => Some(HaltScript {
                vehicle: 0,
                at: self.event_point(),
                duration: self.halt_duration,
            }),
            Condition::NoEvent | Condition::FalseAnnouncement => None,
        }
    }

    pub fn announcement(&self) -> Option<AnnounceScript> {
        match self.condition {
            Condition::TrustworthyAnnouncement => Some(AnnounceScript {
                vehicle: 0,
                truthful: true,
                trigger: AnnounceTrigger::AfterHalt(self.announce_offset),
                interval: self.announce_interval,
                lifetime: None,
            }),
            Condition::FalseAnnouncement => Some(AnnounceScript {
                vehicle: 0,
                truthful: false,
                trigger: AnnounceTrigger::AtPosition(self.event_point()),
                interval: self.announce_interval,
                lifetime: Some(self.false_claim_lifetime),
            }),
            Condition::NoEvent | Condition::UnannouncedEvent => None,
        }
    }

    pub fn rsu_positions(&self) -> Vec<(f64, f64)> {
        match &self.rsu_positions {
            Some(p) => p.clone(),
            None => vec![
                (self.geometry.common_prefix, -RSU_SETBACK),
                (self.event_point(), -RSU_SETBACK),
            ],
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name}: must be positive"));
            }
        };
        positive("duration", self.duration);
        positive("step", self.step);
        positive("insertion_gap", self.insertion_gap);
        positive("announce_interval", self.announce_interval);
        positive("radio_range", self.radio_range);
        positive("beacon_period", self.beacon_period);
        positive("rsu_range", self.rsu_range);
        positive("false_claim_lifetime", self.false_claim_lifetime);
        for (name, v) in [
            ("halt_duration", self.halt_duration),
            ("halt_position", self.halt_position),
            ("announce_offset", self.announce_offset),
            ("depart_jitter", self.depart_jitter),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("{name}: must be non-negative"));
            }
        }
        if !self.follow.is_valid() {
            out.push("follow parameters must be positive".to_string());
        }
        if let Err(e) = RoadGraph::reference(&self.geometry) {
            out.push(e.to_string());
        } else if self.event_point() >= self.geometry.primary_length {
            out.push("halt_position: must lie before the destination".to_string());
        }
        out.extend(self.scheme.problems());
        out
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(SimError::Config(p))
        }
    }
}

/// Every accepted key: (section, key, default, meaning).
pub const KEYS: &[(&str, &str, &str, &str)] = &[
    (
        "scenario",
        "condition",
        "no_event",
        "no_event | false_announcement | unannounced_event | trustworthy_announcement",
    ),
    (
        "scenario",
        "n_vehicles",
        "10",
        "vehicles inserted, ids 0..n",
    ),
    ("scenario", "duration", "300", "horizon in seconds"),
    ("scenario", "step", "0.1", "fixed time step in seconds"),
    (
        "scenario",
        "insertion_gap",
        "1.0",
        "seconds between scheduled insertions",
    ),
    (
        "scenario",
        "depart_jitter",
        "0",
        "uniform random insertion delay bound in seconds",
    ),
    (
        "scenario",
        "halt_duration",
        "120",
        "seconds the front vehicle stays halted",
    ),
    (
        "scenario",
        "halt_position",
        "20",
        "meters past the junction where the event lies",
    ),
    (
        "scenario",
        "announce_offset",
        "0",
        "seconds from halt start to the first announcement",
    ),
    (
        "scenario",
        "announce_interval",
        "1.0",
        "seconds between repeated announcements",
    ),
    (
        "scenario",
        "false_claim_lifetime",
        "40",
        "seconds a false announcement keeps being repeated",
    ),
    (
        "scenario",
        "official",
        "",
        "comma-separated ids of official vehicles",
    ),
    (
        "scenario",
        "seed",
        "1",
        "64-bit seed of the run's random stream",
    ),
    (
        "geometry",
        "common_prefix",
        "200",
        "meters from origin to junction",
    ),
    (
        "geometry",
        "primary_length",
        "1000",
        "meters, origin to destination via primary",
    ),
    (
        "geometry",
        "alternate_length",
        "1400",
        "meters, origin to destination via alternate",
    ),
    (
        "geometry",
        "speed_limit",
        "13.89",
        "meters per second on every edge",
    ),
    ("geometry", "max_accel", "2.6", "m/s^2"),
    ("geometry", "max_decel", "4.5", "m/s^2"),
    ("geometry", "headway", "1.0", "seconds"),
    ("geometry", "min_gap", "2.5", "meters"),
    ("comms", "radio_range", "300", "meters, unit-disk radius"),
    ("comms", "beacon_period", "1.0", "seconds"),
    (
        "comms",
        "hop_budget",
        "5",
        "relay hops allowed for announcements",
    ),
    ("comms", "rsu_range", "300", "meters"),
    (
        "comms",
        "rsu_positions",
        "",
        "x:y pairs separated by commas; empty = junction and event point",
    ),
    (
        "trust",
        "scheme",
        "none",
        "none | receiver_side | sender_side",
    ),
    ("trust", "w_direct", "0.5", "weight of direct evidence"),
    (
        "trust",
        "w_indirect",
        "0.3",
        "weight of neighbor recommendations",
    ),
    ("trust", "w_rsu", "0.2", "weight of the RSU's opinion"),
    (
        "trust",
        "accept_threshold",
        "0.5",
        "receiver acceptance threshold, inclusive",
    ),
    (
        "trust",
        "announce_threshold",
        "0.5",
        "sender announcement threshold, inclusive",
    ),
    (
        "trust",
        "blacklist_floor",
        "0.2",
        "scores below this are blocked",
    ),
    (
        "trust",
        "eval_timer",
        "5.0",
        "receiver-side evaluation window in seconds",
    ),
    ("trust", "quorum", "3", "reports an RSU needs for a verdict"),
    (
        "trust",
        "adjudication_timeout",
        "30",
        "seconds an RSU waits for a quorum",
    ),
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse `{value}`"))
}

fn non_negative(key: &str, value: &str) -> Result<f64, String> {
    let v: f64 = parse_num(key, value)?;
    if v < 0.0 || !v.is_finite() {
        return Err(format!("{key}: must be non-negative, got {value}"));
    }
    Ok(v)
}

fn positive(key: &str, value: &str) -> Result<f64, String> {
    let v: f64 = parse_num(key, value)?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(format!("{key}: must be positive, got {value}"));
    }
    Ok(v)
}

fn apply(cfg: &mut ScenarioConfig, section: &str, key: &str, value: &str) -> Result<(), String> {
    match (section, key) {
        ("scenario", "condition") => {
            cfg.condition =
                Condition::parse(value).ok_or_else(|| format!("condition: unknown `{value}`"))?;
        }
        ("scenario", "n_vehicles") => cfg.n_vehicles = parse_num(key, value)?,
        ("scenario", "duration") => cfg.duration = positive(key, value)?,
        ("scenario", "step") => cfg.step = positive(key, value)?,
        ("scenario", "insertion_gap") => cfg.insertion_gap = positive(key, value)?,
        ("scenario", "depart_jitter") => cfg.depart_jitter = non_negative(key, value)?,
        ("scenario", "halt_duration") => cfg.halt_duration = non_negative(key, value)?,
        ("scenario", "halt_position") => cfg.halt_position = non_negative(key, value)?,
        ("scenario", "announce_offset") => cfg.announce_offset = non_negative(key, value)?,
        ("scenario", "announce_interval") => cfg.announce_interval = positive(key, value)?,
        ("scenario", "false_claim_lifetime") => cfg.false_claim_lifetime = positive(key, value)?,
        ("scenario", "official") => {
            cfg.official = value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse_num(key, s))
                .collect::<Result<_, _>>()?;
        }
        ("scenario", "seed") => cfg.seed = parse_num(key, value)?,
        ("geometry", "common_prefix") => cfg.geometry.common_prefix = positive(key, value)?,
        ("geometry", "primary_length") => cfg.geometry.primary_length = positive(key, value)?,
        ("geometry", "alternate_length") => cfg.geometry.alternate_length = positive(key, value)?,
        ("geometry", "speed_limit") => cfg.geometry.speed_limit = positive(key, value)?,
        ("geometry", "max_accel") => cfg.follow.max_accel = positive(key, value)?,
        ("geometry", "max_decel") => cfg.follow.max_decel = positive(key, value)?,
        ("geometry", "headway") => cfg.follow.headway = positive(key, value)?,
        ("geometry", "min_gap") => cfg.follow.min_gap = positive(key, value)?,
        ("comms", "radio_range") => cfg.radio_range = positive(key, value)?,
        ("comms", "beacon_period") => cfg.beacon_period = positive(key, value)?,
        ("comms", "hop_budget") => cfg.hop_budget = parse_num(key, value)?,
        ("comms", "rsu_range") => cfg.rsu_range = positive(key, value)?,
        ("comms", "rsu_positions") => {
            let mut out = Vec::new();
            for pair in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (x, y) = pair
                    .split_once(':')
                    .ok_or_else(|| format!("rsu_positions: expected x:y, got `{pair}`"))?;
                out.push((parse_num(key, x.trim())?, parse_num(key, y.trim())?));
            }
            cfg.rsu_positions = (!out.is_empty()).then_some(out);
        }
        ("trust", "scheme") => {
            cfg.scheme.scheme =
                Scheme::parse(value).ok_or_else(|| format!("scheme: unknown `{value}`"))?;
        }
        ("trust", "w_direct") => cfg.scheme.w_direct = non_negative(key, value)?,
        ("trust", "w_indirect") => cfg.scheme.w_indirect = non_negative(key, value)?,
        ("trust", "w_rsu") => cfg.scheme.w_rsu = non_negative(key, value)?,
        ("trust", "accept_threshold") => cfg.scheme.accept_threshold = non_negative(key, value)?,
        ("trust", "announce_threshold") => {
            cfg.scheme.announce_threshold = non_negative(key, value)?
        }
        ("trust", "blacklist_floor") => cfg.scheme.blacklist_floor = non_negative(key, value)?,
        ("trust", "eval_timer") => cfg.scheme.eval_timer = non_negative(key, value)?,
        ("trust", "quorum") => cfg.scheme.quorum = parse_num(key, value)?,
        ("trust", "adjudication_timeout") => {
            cfg.scheme.adjudication_timeout = positive(key, value)?
        }
        _ => return Err(format!("unknown key `{key}` in section [{section}]")),
    }
    Ok(())
}

/// Parses a scenario file; all problems are collected, each with its line.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, SimError> {
    let mut cfg = ScenarioConfig::default();
    let mut errors = Vec::new();
    let mut section: Option<String> = None;
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if ["scenario", "geometry", "comms", "trust"].contains(&name) {
                section = Some(name.to_string());
            } else {
                errors.push(format!("line {line_no}: unknown section [{name}]"));
                section = None;
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {line_no}: expected `key = value`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section.as_deref() else {
            errors.push(format!(
                "line {line_no}: {key}: key outside of a known section"
            ));
            continue;
        };
        if !seen.insert((sec.to_string(), key.to_string())) {
            errors.push(format!("line {line_no}: {key}: duplicate key"));
            continue;
        }
        if let Err(e) = apply(&mut cfg, sec, key, value) {
            errors.push(format!("line {line_no}: {e}"));
        }
    }
    if errors.is_empty() {
        errors.extend(cfg.problems());
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(SimError::Config(errors))
    }
}

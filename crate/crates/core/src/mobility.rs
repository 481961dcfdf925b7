//! Car-following dynamics, insertion, halting and rerouting.

use crate::engine::EventPayload;
use crate::error::SimError;
use crate::road::{RoadGraph, Route, RoutePosition};

pub type VehicleId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Regular,
    Official,
    MaliciousCapable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehicleState {
    QueuedForInsertion,
    Driving,
    Halted,
    Finished,
}

impl VehicleState {
    pub fn as_str(self) -> &'static str {
        match self {
            VehicleState::QueuedForInsertion => "queued for insertion",
            VehicleState::Driving => "driving",
            VehicleState::Halted => "halted",
            VehicleState::Finished => "finished",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: VehicleId,
    pub role: Role,
    pub pos: RoutePosition,
    pub speed: f64,
    pub state: VehicleState,
    pub inserted_at: f64,
    pub finished_at: Option<f64>,
    pub passed_junction: bool,
    pub rerouted: bool,
}

impl Vehicle {
    pub fn new(id: VehicleId, role: Role) -> Self {
        Vehicle {
            id,
            role,
            pos: RoutePosition::start(Route::Primary),
            speed: 0.0,
            state: VehicleState::QueuedForInsertion,
            inserted_at: 0.0,
            finished_at: None,
            passed_junction: false,
            rerouted: false,
        }
    }

    pub fn route(&self) -> Route {
        self.pos.route
    }

    /// Driving or halted: present on the road and able to communicate.
    pub fn on_road(&self) -> bool {
        matches!(self.state, VehicleState::Driving | VehicleState::Halted)
    }
}

/// Parameters of the safe-speed car-following law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowParams {
    pub max_accel: f64,
    pub max_decel: f64,
    /// Desired time gap in seconds.
    pub headway: f64,
    /// Standstill distance to the leader in meters.
    pub min_gap: f64,
}

impl Default for FollowParams {
    fn default() -> Self {
        FollowParams {
            max_accel: 2.6,
            max_decel: 4.5,
            headway: 1.0,
            min_gap: 2.5,
        }
    }
}

impl FollowParams {
    pub fn is_valid(&self) -> bool {
        [self.max_accel, self.max_decel, self.headway, self.min_gap]
            .iter()
            .all(|x| *x > 0.0 && x.is_finite())
    }
}

/// Speed the gap allows: `(gap - min_gap) / headway`, floored at zero.
pub fn safe_speed(gap: f64, p: &FollowParams) -> f64 {
    ((gap - p.min_gap) / p.headway).max(0.0)
}

/// Highest speed from which braking at `max_decel` in steps of `dt`
/// still stops within `dist`.
pub fn stopping_speed(dist: f64, p: &FollowParams, dt: f64) -> f64 {
    let half = p.max_decel * dt / 2.0;
    ((2.0 * p.max_decel * dist.max(0.0) + half * half).sqrt() - half).max(0.0)
}

/// Distance a vehicle at `speed` still covers after this step when it
/// brakes at `max_decel` from now on.
fn braking_distance(speed: f64, p: &FollowParams, dt: f64) -> f64 {
    (speed * speed / (2.0 * p.max_decel) - speed * dt / 2.0).max(0.0)
}

/// Target speed behind a leader, before acceleration bounds.
///
/// The headway law, capped so the follower can always stop short of
/// `min_gap` even if the leader brakes as hard as it can.
pub fn desired_speed(gap: f64, leader_speed: f64, limit: f64, p: &FollowParams, dt: f64) -> f64 {
    if gap.is_infinite() {
        return limit;
    }
    // Stepwise braking can overrun the closed form by up to b*dt^2/8.
    let quantization = p.max_decel * dt * dt / 8.0;
    let room = gap - p.min_gap + braking_distance(leader_speed, p, dt) - quantization;
    limit
        .min(safe_speed(gap, p))
        .min(stopping_speed(room, p, dt))
}

/// Next speed for a vehicle `gap` meters behind a leader moving at
/// `leader_speed`; `gap` is infinite when nothing is ahead.
///
/// The result stays within the acceleration and deceleration bounds
/// except when holding them would drive the vehicle past its leader
/// within this step.
pub fn follow_speed(
    self_speed: f64,
    gap: f64,
    leader_speed: f64,
    limit: f64,
    p: &FollowParams,
    dt: f64,
) -> f64 {
    let desired = desired_speed(gap, leader_speed, limit, p, dt);
    let lo = (self_speed - p.max_decel * dt).max(0.0);
    let hi = self_speed + p.max_accel * dt;
    desired
        .clamp(lo, hi.max(lo))
        .min(limit)
        .min(gap.max(0.0) / dt)
        .max(0.0)
}

/// Insertion events at `0, gap, 2*gap, ...` for vehicles `0..n`.
pub fn insertion_schedule(n: u32, gap: f64) -> Vec<(f64, EventPayload)> {
    (0..n)
        .map(|id| (id as f64 * gap, EventPayload::Insertion { vehicle: id }))
        .collect()
}

/// What happened to a vehicle during one [`advance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AdvanceOutcome {
    pub crossed_junction: bool,
    pub finished: bool,
}

/// Moves a driving vehicle `speed * dt` along its route.
pub fn advance(v: &mut Vehicle, dt: f64, g: &RoadGraph, now: f64) -> AdvanceOutcome {
    debug_assert_eq!(v.state, VehicleState::Driving);
    let step = v.speed * dt;
    move_by(v, step, g, now)
}

/// Moves a vehicle a fixed distance, rolling over edge boundaries.
pub fn move_by(v: &mut Vehicle, dist: f64, g: &RoadGraph, now: f64) -> AdvanceOutcome {
    let mut out = AdvanceOutcome::default();
    let edges = g.route(v.route());
    let shared = g.shared_prefix_len();
    v.pos.offset += dist.max(0.0);
    loop {
        let len = g.edge(edges[v.pos.edge_index]).length;
        if v.pos.offset < len {
            break;
        }
        if v.pos.edge_index + 1 == edges.len() {
            v.pos.offset = len;
            v.state = VehicleState::Finished;
            v.finished_at = Some(now);
            v.speed = 0.0;
            out.finished = true;
            break;
        }
        v.pos.offset -= len;
        v.pos.edge_index += 1;
    }
    if !v.passed_junction && (v.pos.edge_index >= shared || out.finished) {
        v.passed_junction = true;
        out.crossed_junction = true;
    }
    out
}

/// Stops a driving vehicle and returns the event that resumes it.
pub fn halt(v: &mut Vehicle, duration: f64, now: f64) -> Result<(f64, EventPayload), SimError> {
    if v.state != VehicleState::Driving {
        return Err(SimError::CannotHalt {
            id: v.id,
            state: v.state.as_str(),
        });
    }
    v.state = VehicleState::Halted;
    v.speed = 0.0;
    Ok((
        now + duration.max(0.0),
        EventPayload::HaltEnd { vehicle: v.id },
    ))
}

pub fn resume(v: &mut Vehicle) {
    if v.state == VehicleState::Halted {
        v.state = VehicleState::Driving;
    }
}

/// Switches a vehicle still on the shared stretch over to the alternate route.
///
/// Returns true when the route changed. The caller is responsible for
/// only passing diversions its trust scheme accepted.
pub fn maybe_reroute(v: &mut Vehicle, g: &RoadGraph) -> bool {
    if v.passed_junction || v.route() != Route::Primary || v.state == VehicleState::Finished {
        return false;
    }
    let shared = g.shared_prefix_len();
    debug_assert!(v.pos.edge_index < shared);
    v.pos.route = Route::Alternate;
    v.rerouted = true;
    true
}

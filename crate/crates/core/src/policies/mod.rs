//! Guarding policies and the motion primitives they command.
//!
//! A policy sees a [`Snapshot`] (time, vehicle position and the targets that
//! have arrived and are still unresolved) and answers with a [`Plan`]. The
//! engine executes the plan's trajectory and, if the plan names a target, a
//! capture at the trajectory's end time.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{shortest_sweep, Point};
use crate::model::{ArrivalStream, Environment, Target, TargetId};

mod fcfs;
mod lookahead;
mod rmhp;
mod sac;

pub use fcfs::Fcfs;
pub use lookahead::{LookAhead, NonCausalLookAhead};
pub use rmhp::RepeatedTour;
pub use sac::StayAtCenter;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("unknown policy `{0}` (valid: fcfs, sac, la, ncla, rmhp)")]
    Unknown(String),
    #[error("policy `{0}` needs moving targets (v > 0)")]
    NeedsMovingTargets(PolicyKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Fcfs,
    Sac,
    La,
    Ncla,
    Rmhp,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [Self::Fcfs, Self::Sac, Self::La, Self::Ncla, Self::Rmhp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fcfs => "fcfs",
            Self::Sac => "sac",
            Self::La => "la",
            Self::Ncla => "ncla",
            Self::Rmhp => "rmhp",
        }
    }

    /// Where the vehicle sits at time 0.
    pub fn start_position(self, env: &Environment) -> Point {
        match self {
            Self::Fcfs | Self::Sac => Point::ORIGIN,
            Self::La | Self::Ncla => Point::new(env.rho, 0.0),
            Self::Rmhp => Point::new(2.0 * env.rho, 0.0),
        }
    }

    /// `trace` is only read by the non-causal policy.
    pub fn build(self, env: Environment, trace: &ArrivalStream) -> Result<Box<dyn Policy>, PolicyError> {
        Ok(match self {
            Self::Fcfs => Box::new(Fcfs::new(env)),
            Self::Sac => Box::new(StayAtCenter::new(env)),
            Self::La => Box::new(LookAhead::new(env)),
            Self::Ncla => Box::new(NonCausalLookAhead::new(env, trace)),
            Self::Rmhp => {
                if env.v <= 0.0 {
                    return Err(PolicyError::NeedsMovingTargets(self));
                }
                Box::new(RepeatedTour::new(env))
            }
        })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| PolicyError::Unknown(s.to_string()))
    }
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    fn decide(&mut self, snapshot: &Snapshot<'_>) -> Plan;

    /// Whether a new arrival should interrupt the current plan. `busy` is true
    /// while a capture is scheduled.
    fn replan_on_arrival(&self, busy: bool) -> bool;
}

/// A target that has arrived and is neither captured nor escaped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveTarget {
    pub id: TargetId,
    pub theta: f64,
    pub arrival_time: f64,
    /// Radius at the snapshot time.
    pub radius: f64,
}

impl ActiveTarget {
    pub fn position(&self) -> Point {
        Point::polar(self.radius, self.theta)
    }

    pub fn escape_time(&self, env: &Environment) -> Option<f64> {
        env.crossing_time().map(|c| self.arrival_time + c)
    }
}

/// What a causal policy may know at one instant.
///
/// The target table behind it also holds future arrivals, but only ids in the
/// active set are ever exposed.
#[derive(Clone, Copy)]
pub struct Snapshot<'a> {
    time: f64,
    vehicle: Point,
    env: Environment,
    targets: &'a [Target],
    active: &'a BTreeSet<TargetId>,
}

impl<'a> Snapshot<'a> {
    /// `targets[i]` must have id `i`, in arrival order; `active` holds ids of
    /// arrived, unresolved targets.
    pub fn new(
        time: f64,
        vehicle: Point,
        env: Environment,
        targets: &'a [Target],
        active: &'a BTreeSet<TargetId>,
    ) -> Self {
        Self {
            time,
            vehicle,
            env,
            targets,
            active,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn vehicle(&self) -> Point {
        self.vehicle
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    fn view(&self, id: TargetId) -> ActiveTarget {
        let t = &self.targets[id];
        ActiveTarget {
            id,
            theta: t.theta,
            arrival_time: t.arrival_time,
            radius: t.radius_at(self.time, &self.env),
        }
    }

    /// Active targets in arrival order.
    pub fn active(&self) -> impl Iterator<Item = ActiveTarget> + '_ {
        self.active.iter().map(move |&id| self.view(id))
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn target(&self, id: TargetId) -> Option<ActiveTarget> {
        self.active.contains(&id).then(|| self.view(id))
    }

    /// Active targets with radius strictly inside `(lo, hi)`, in arrival order.
    pub fn active_in_band(&self, lo: f64, hi: f64) -> Vec<ActiveTarget> {
        let in_band = |t: &ActiveTarget| t.radius > lo && t.radius < hi;
        if self.env.v <= 0.0 {
            return self.active().filter(in_band).collect();
        }
        // radius is monotone in arrival time, so the band is an id range
        // (padded by one on each side against rounding)
        let oldest = self.time - (self.env.capital_d - lo) / self.env.v;
        let newest = self.time - (self.env.capital_d - hi) / self.env.v;
        let first = self.targets.partition_point(|t| t.arrival_time < oldest).saturating_sub(1);
        let last = self.targets.partition_point(|t| t.arrival_time <= newest) + 1;
        self.active
            .range(first..last)
            .map(|&id| self.view(id))
            .filter(in_band)
            .collect()
    }
}

/// One piece of a vehicle trajectory on `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Hold { t0: f64, t1: f64, at: Point },
    Line { t0: f64, t1: f64, from: Point, to: Point },
    /// Along the circle of `radius`, sweeping the signed angle `sweep`.
    Arc { t0: f64, t1: f64, radius: f64, from_angle: f64, sweep: f64 },
}

impl Segment {
    pub fn t0(&self) -> f64 {
        match *self {
            Segment::Hold { t0, .. } | Segment::Line { t0, .. } | Segment::Arc { t0, .. } => t0,
        }
    }

    pub fn t1(&self) -> f64 {
        match *self {
            Segment::Hold { t1, .. } | Segment::Line { t1, .. } | Segment::Arc { t1, .. } => t1,
        }
    }

    fn fraction(t: f64, t0: f64, t1: f64) -> f64 {
        if t1 > t0 {
            ((t - t0) / (t1 - t0)).clamp(0.0, 1.0)
        } else {
            1.0
        }
    }

    pub fn position(&self, t: f64) -> Point {
        match *self {
            Segment::Hold { at, .. } => at,
            Segment::Line { t0, t1, from, to } => {
                let s = Self::fraction(t, t0, t1);
                if s >= 1.0 {
                    to
                } else {
                    from + (to - from) * s
                }
            }
            Segment::Arc {
                t0,
                t1,
                radius,
                from_angle,
                sweep,
            } => Point::polar(radius, from_angle + sweep * Self::fraction(t, t0, t1)),
        }
    }
}

/// Piecewise motion starting at `(start_time, start)`. After the last segment
/// the vehicle stays where it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    start_time: f64,
    start: Point,
    segments: Vec<Segment>,
}

impl Trajectory {
    pub fn starting(at: Point, time: f64) -> Self {
        Self {
            start_time: time,
            start: at,
            segments: Vec::new(),
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(self.start_time, Segment::t1)
    }

    pub fn end_position(&self) -> Point {
        self.segments.last().map_or(self.start, |s| s.position(s.t1()))
    }

    pub fn position(&self, t: f64) -> Point {
        if t <= self.start_time {
            return self.start;
        }
        let k = self.segments.partition_point(|s| s.t1() < t);
        match self.segments.get(k) {
            Some(s) => s.position(t),
            None => self.end_position(),
        }
    }

    /// Straight move at unit speed.
    pub fn line_to(self, to: Point) -> Self {
        let t1 = self.end_time() + self.end_position().distance(to);
        self.line_to_by(to, t1)
    }

    /// Straight move arriving exactly at `t1` (an intercept time computed elsewhere).
    pub fn line_to_by(mut self, to: Point, t1: f64) -> Self {
        let t0 = self.end_time();
        let from = self.end_position();
        if from != to || t1 > t0 {
            self.segments.push(Segment::Line { t0, t1: t1.max(t0), from, to });
        }
        self
    }

    /// Shortest arc along the circle through the current position to angle
    /// `theta`, at unit speed but never ending after `deadline`.
    pub fn arc_to(mut self, theta: f64, deadline: f64) -> Self {
        let t0 = self.end_time();
        let from = self.end_position();
        let radius = from.norm();
        let from_angle = from.angle();
        let sweep = shortest_sweep(from_angle, theta);
        if sweep != 0.0 {
            let t1 = (t0 + radius * sweep.abs()).min(deadline).max(t0);
            self.segments.push(Segment::Arc {
                t0,
                t1,
                radius,
                from_angle,
                sweep,
            });
        }
        self
    }

    pub fn hold_until(mut self, t1: f64) -> Self {
        let t0 = self.end_time();
        if t1 > t0 {
            let at = self.end_position();
            self.segments.push(Segment::Hold { t0, t1, at });
        }
        self
    }

    /// Length travelled, for checking unit speed.
    pub fn path_length(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match *s {
                Segment::Hold { .. } => 0.0,
                Segment::Line { from, to, .. } => from.distance(to),
                Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
            })
            .sum()
    }
}

/// What the vehicle is doing, for logs and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VehicleMode {
    IdleAtCenter,
    EnRoute { target: TargetId, intercept: Point, eta: f64 },
    /// On the perimeter heading to `angle`; `direction` is +1 counter-clockwise, -1 clockwise, 0 holding.
    PerimeterConstrained { angle: f64, direction: i8 },
    FollowingTour { leg: usize },
    Repositioning,
    Holding,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: Point,
    pub mode: VehicleMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maneuver {
    pub trajectory: Trajectory,
    /// Captured when the trajectory ends.
    pub capture: Option<TargetId>,
    pub mode: VehicleMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    /// Stay where you are until something happens.
    Idle,
    Maneuver(Maneuver),
}

impl Plan {
    pub fn capture(&self) -> Option<(TargetId, f64)> {
        match self {
            Plan::Maneuver(m) => m.capture.map(|id| (id, m.trajectory.end_time())),
            Plan::Idle => None,
        }
    }
}

/// Arc to `theta` on the perimeter, wait, capture at `capture_time`.
pub(crate) fn perimeter_capture(now: f64, vehicle: Point, id: TargetId, theta: f64, capture_time: f64) -> Plan {
    let sweep = shortest_sweep(vehicle.angle(), theta);
    let trajectory = Trajectory::starting(vehicle, now)
        .arc_to(theta, capture_time)
        .hold_until(capture_time);
    Plan::Maneuver(Maneuver {
        trajectory,
        capture: Some(id),
        mode: VehicleMode::PerimeterConstrained {
            angle: theta,
            direction: if sweep > 0.0 { 1 } else if sweep < 0.0 { -1 } else { 0 },
        },
    })
}

use crate::geometry::{intercept_time, Point};
use crate::model::Environment;

use super::{Maneuver, Plan, Policy, PolicyKind, Snapshot, Trajectory, VehicleMode};

/// Chase the earliest-arrived target that can still be caught before the
/// perimeter; head back to the center when there is none.
#[derive(Debug, Clone)]
pub struct Fcfs {
    env: Environment,
}

impl Fcfs {
    pub fn new(env: Environment) -> Self {
        Self { env }
    }
}

impl Policy for Fcfs {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Fcfs
    }

    fn decide(&mut self, snap: &Snapshot<'_>) -> Plan {
        let now = snap.time();
        let p = snap.vehicle();
        let env = &self.env;
        for t in snap.active() {
            // targets that are already lost are skipped, not chased
            let Ok(sol) = intercept_time(p, t.radius, t.theta, env.v, env.rho) else {
                continue;
            };
            let eta = now + sol.time_to_intercept;
            return Plan::Maneuver(Maneuver {
                trajectory: Trajectory::starting(p, now).line_to_by(sol.intercept_point, eta),
                capture: Some(t.id),
                mode: VehicleMode::EnRoute {
                    target: t.id,
                    intercept: sol.intercept_point,
                    eta,
                },
            });
        }
        if p == Point::ORIGIN {
            Plan::Idle
        } else {
            Plan::Maneuver(Maneuver {
                trajectory: Trajectory::starting(p, now).line_to(Point::ORIGIN),
                capture: None,
                mode: VehicleMode::Repositioning,
            })
        }
    }

    fn replan_on_arrival(&self, busy: bool) -> bool {
        !busy
    }
}

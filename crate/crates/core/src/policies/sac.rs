use crate::geometry::Point;
use crate::model::Environment;

use super::{Maneuver, Plan, Policy, PolicyKind, Snapshot, Trajectory, VehicleMode};

/// Wait at the center; dash out to meet each target exactly at the perimeter
/// and come straight back. Targets that reach the perimeter while the vehicle
/// is away escape.
#[derive(Debug, Clone)]
pub struct StayAtCenter {
    env: Environment,
}

impl StayAtCenter {
    pub fn new(env: Environment) -> Self {
        Self { env }
    }
}

impl Policy for StayAtCenter {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Sac
    }

    fn decide(&mut self, snap: &Snapshot<'_>) -> Plan {
        let now = snap.time();
        let p = snap.vehicle();
        if p != Point::ORIGIN {
            return Plan::Maneuver(Maneuver {
                trajectory: Trajectory::starting(p, now).line_to(Point::ORIGIN),
                capture: None,
                mode: VehicleMode::Repositioning,
            });
        }
        let rho = self.env.rho;
        // escape order equals arrival order, so the first servable target is the
        // earliest one (smallest id on ties)
        let next = snap.active().find_map(|t| {
            let escape = t.escape_time(&self.env)?;
            (now + rho <= escape).then_some((t, escape))
        });
        let Some((t, escape)) = next else {
            return Plan::Idle;
        };
        let dash = (escape - rho).max(t.arrival_time).max(now);
        let trajectory = Trajectory::starting(p, now)
            .hold_until(dash)
            .line_to_by(Point::polar(rho, t.theta), escape);
        Plan::Maneuver(Maneuver {
            trajectory,
            capture: Some(t.id),
            mode: VehicleMode::EnRoute {
                target: t.id,
                intercept: Point::polar(rho, t.theta),
                eta: escape,
            },
        })
    }

    fn replan_on_arrival(&self, busy: bool) -> bool {
        !busy
    }
}

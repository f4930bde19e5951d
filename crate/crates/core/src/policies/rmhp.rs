use std::collections::VecDeque;

use crate::geometry::{intercept_time, Point};
use crate::model::{Environment, TargetId};
use crate::tour::emhp_heuristic;

use super::{Maneuver, Plan, Policy, PolicyKind, Snapshot, Trajectory, VehicleMode};

/// Repeated Hamiltonian-path sweeps of the band `2ρ < r < 3ρ`.
///
/// Every `ρ/v` time units the targets in the band are frozen into a batch and
/// ordered by [`emhp_heuristic`] from the vehicle position. Legs are flown as
/// moving-target intercepts while the leg plus the way back to radius `2ρ`
/// still fits in the iteration; the rest of the batch is abandoned and the
/// vehicle waits at `2ρ` for the next iteration.
#[derive(Debug, Clone)]
pub struct RepeatedTour {
    env: Environment,
    iteration_end: Option<f64>,
    batch: VecDeque<TargetId>,
    leg: usize,
}

impl RepeatedTour {
    pub fn new(env: Environment) -> Self {
        Self {
            env,
            iteration_end: None,
            batch: VecDeque::new(),
            leg: 0,
        }
    }

    pub fn iteration_length(&self) -> f64 {
        self.env.rho / self.env.v
    }

    fn start_iteration(&mut self, snap: &Snapshot<'_>) {
        let rho = self.env.rho;
        let band = snap.active_in_band(2.0 * rho, 3.0 * rho);
        let points: Vec<Point> = band.iter().map(|t| t.position()).collect();
        let plan = emhp_heuristic(snap.vehicle(), &points);
        self.batch = plan.order.iter().map(|&i| band[i].id).collect();
        self.iteration_end = Some(snap.time() + self.iteration_length());
        self.leg = 0;
    }

    fn home_radius(&self) -> f64 {
        2.0 * self.env.rho
    }

    fn return_distance(&self, p: Point) -> f64 {
        (p.norm() - self.home_radius()).abs()
    }

    fn home_point(&self, p: Point) -> Point {
        if p == Point::ORIGIN {
            Point::new(self.home_radius(), 0.0)
        } else {
            p * (self.home_radius() / p.norm())
        }
    }
}

impl Policy for RepeatedTour {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Rmhp
    }

    fn decide(&mut self, snap: &Snapshot<'_>) -> Plan {
        let now = snap.time();
        let p = snap.vehicle();
        if self.iteration_end.is_none_or(|end| now >= end) {
            self.start_iteration(snap);
        }
        let end = self.iteration_end.expect("iteration started");
        let env = self.env;

        while let Some(&id) = self.batch.front() {
            let Some(t) = snap.target(id) else {
                self.batch.pop_front();
                continue;
            };
            let Ok(sol) = intercept_time(p, t.radius, t.theta, env.v, env.rho) else {
                // would cross the perimeter first
                self.batch.pop_front();
                continue;
            };
            let eta = now + sol.time_to_intercept;
            if eta + self.return_distance(sol.intercept_point) > end {
                self.batch.clear();
                break;
            }
            self.batch.pop_front();
            self.leg += 1;
            return Plan::Maneuver(Maneuver {
                trajectory: Trajectory::starting(p, now).line_to_by(sol.intercept_point, eta),
                capture: Some(id),
                mode: VehicleMode::FollowingTour { leg: self.leg - 1 },
            });
        }

        let trajectory = Trajectory::starting(p, now)
            .line_to(self.home_point(p))
            .hold_until(end);
        Plan::Maneuver(Maneuver {
            trajectory,
            capture: None,
            mode: VehicleMode::Holding,
        })
    }

    fn replan_on_arrival(&self, _busy: bool) -> bool {
        false
    }
}

use std::collections::VecDeque;

use crate::graph::{longest_reachable_chain, DagItem};
use crate::model::{ArrivalStream, Environment, TargetId};

use super::{perimeter_capture, Plan, Policy, PolicyKind, Snapshot};

/// Stays on the perimeter and follows the longest chain of targets it can
/// meet there, recomputed whenever something changes.
#[derive(Debug, Clone)]
pub struct LookAhead {
    env: Environment,
}

impl LookAhead {
    pub fn new(env: Environment) -> Self {
        Self { env }
    }

    /// Full capture schedule from the current snapshot: `(id, θ, capture time)`
    /// in capture order.
    pub fn schedule(&self, snap: &Snapshot<'_>) -> Vec<(TargetId, f64, f64)> {
        let items: Vec<DagItem> = snap
            .active()
            .map(|t| DagItem {
                id: t.id,
                radius: t.radius,
                theta: t.theta,
            })
            .collect();
        let chain = longest_reachable_chain(snap.vehicle().angle(), &items, self.env.v, self.env.rho);
        let arrivals: Vec<f64> = snap.active().map(|t| t.arrival_time).collect();
        chain_schedule(&chain, &items, &arrivals, &self.env)
    }
}

fn chain_schedule(
    chain: &[usize],
    items: &[DagItem],
    arrivals: &[f64],
    env: &Environment,
) -> Vec<(TargetId, f64, f64)> {
    let Some(crossing) = env.crossing_time() else {
        return Vec::new();
    };
    chain
        .iter()
        .skip(1)
        .map(|&vertex| {
            let i = vertex - 1;
            (items[i].id, items[i].theta, arrivals[i] + crossing)
        })
        .collect()
}

impl Policy for LookAhead {
    fn kind(&self) -> PolicyKind {
        PolicyKind::La
    }

    fn decide(&mut self, snap: &Snapshot<'_>) -> Plan {
        match self.schedule(snap).first() {
            Some(&(id, theta, at)) => perimeter_capture(snap.time(), snap.vehicle(), id, theta, at),
            None => Plan::Idle,
        }
    }

    fn replan_on_arrival(&self, _busy: bool) -> bool {
        true
    }
}

/// Plans once, at its first decision, over the whole arrival trace (future
/// targets included) and then executes that schedule without replanning.
#[derive(Debug, Clone)]
pub struct NonCausalLookAhead {
    env: Environment,
    trace: Vec<(TargetId, f64, f64)>,
    schedule: Option<VecDeque<(TargetId, f64, f64)>>,
}

impl NonCausalLookAhead {
    pub fn new(env: Environment, trace: &ArrivalStream) -> Self {
        Self {
            env,
            trace: trace
                .iter()
                .enumerate()
                .map(|(id, a)| (id, a.theta, a.time))
                .collect(),
            schedule: None,
        }
    }

    fn plan_all(&self, snap: &Snapshot<'_>) -> VecDeque<(TargetId, f64, f64)> {
        let now = snap.time();
        let env = &self.env;
        // unarrived targets get a virtual radius beyond D
        let (items, arrivals): (Vec<DagItem>, Vec<f64>) = self
            .trace
            .iter()
            .map(|&(id, theta, arrival)| {
                let item = DagItem {
                    id,
                    radius: env.capital_d - env.v * (now - arrival),
                    theta,
                };
                (item, arrival)
            })
            .unzip();
        let chain = longest_reachable_chain(snap.vehicle().angle(), &items, env.v, env.rho);
        chain_schedule(&chain, &items, &arrivals, env).into()
    }

    /// The schedule fixed at the first decision, if it has been made.
    pub fn remaining(&self) -> Option<&VecDeque<(TargetId, f64, f64)>> {
        self.schedule.as_ref()
    }
}

impl Policy for NonCausalLookAhead {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Ncla
    }

    fn decide(&mut self, snap: &Snapshot<'_>) -> Plan {
        if self.schedule.is_none() {
            self.schedule = Some(self.plan_all(snap));
        }
        let queue = self.schedule.as_mut().expect("planned above");
        match queue.pop_front() {
            Some((id, theta, at)) => perimeter_capture(snap.time(), snap.vehicle(), id, theta, at),
            None => Plan::Idle,
        }
    }

    fn replan_on_arrival(&self, _busy: bool) -> bool {
        false
    }
}

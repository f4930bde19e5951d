//! Event-driven simulation of one vehicle against a stream of targets, and
//! Monte Carlo estimation of the capture fraction.
//!
//! Vehicle motion is piecewise (straight lines, perimeter arcs, holds) so every
//! event time is known in closed form; nothing is integrated numerically.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{intercept_time, Point};
use crate::model::{
    generate_arrivals, rng_from_seed, ArrivalStream, ConfigError, SimConfig, TargetId, TargetState,
};
use crate::policies::{Plan, PolicyError, PolicyKind, Snapshot, Trajectory};

/// Half-width multiplier of the normal-approximation 95% interval.
pub const Z_95: f64 = 1.96;
/// Largest vehicle–target distance accepted at a capture.
pub const CAPTURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("need at least 2 runs for an interval, got {0}")]
    TooFewRuns(usize),
    #[error("no run resolved any target after warm-up ({runs} runs)")]
    NoDefinedRuns { runs: usize },
    #[error("band [{r1}, {r2}] is not inside the populated region [{lo}, {hi}]")]
    BandOutsidePopulated { r1: f64, r2: f64, lo: f64, hi: f64 },
    #[error("sector [{0}, {1}] must satisfy 0 <= start <= end <= 2*pi")]
    Sector(f64, f64),
}

/// Simultaneous events resolve in declaration order, then by target id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Capture,
    Escape,
    Arrival,
    Decision,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
    id: TargetId,
    /// Plan generation that scheduled a capture or decision; stale ones are dropped.
    generation: u64,
}

impl Event {
    fn key(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.id.cmp(&other.id))
            .then(self.generation.cmp(&other.generation))
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.key(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub time: f64,
    pub kind: EventKind,
    pub id: TargetId,
    pub vehicle: Point,
    /// Target radius at the event time (arrivals, captures, escapes).
    pub target_radius: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    pub log: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub policy: PolicyKind,
    pub config: SimConfig,
    pub seed: u64,
    /// Captures and escapes in `[warmup, horizon]`.
    pub n_capt: usize,
    pub n_esc: usize,
    pub n_arrivals: usize,
    /// Targets still active at the horizon; excluded from both counts.
    pub unresolved: usize,
    /// Largest vehicle–target distance seen at any capture.
    pub max_capture_gap: f64,
    /// Smallest target radius seen at any capture.
    pub min_capture_radius: f64,
    pub events: usize,
    pub log: Option<Vec<LogEntry>>,
}

impl RunMetrics {
    /// `None` when nothing was resolved after warm-up.
    pub fn capture_fraction(&self) -> Option<f64> {
        let total = self.n_capt + self.n_esc;
        (total > 0).then(|| self.n_capt as f64 / total as f64)
    }
}

pub fn run_simulation(config: &SimConfig, policy: PolicyKind) -> Result<RunMetrics, EngineError> {
    run_with_options(config, policy, RunOptions::default())
}

pub fn run_with_options(
    config: &SimConfig,
    policy: PolicyKind,
    options: RunOptions,
) -> Result<RunMetrics, EngineError> {
    config.validate()?;
    run_with_arrivals(config, policy, &generate_arrivals(config), options)
}

/// Runs `policy` against a given arrival trace. Arrivals after the horizon are
/// never delivered.
pub fn run_with_arrivals(
    config: &SimConfig,
    kind: PolicyKind,
    arrivals: &ArrivalStream,
    options: RunOptions,
) -> Result<RunMetrics, EngineError> {
    config.validate()?;
    let env = config.environment();
    let mut policy = kind.build(env, arrivals)?;
    let mut targets = arrivals.targets();
    let mut active: BTreeSet<TargetId> = BTreeSet::new();
    let mut queue: BinaryHeap<Event> = targets
        .iter()
        .map(|t| Event {
            time: t.arrival_time,
            kind: EventKind::Arrival,
            id: t.id,
            generation: 0,
        })
        .collect();

    let mut metrics = RunMetrics {
        policy: kind,
        config: *config,
        seed: config.seed,
        n_capt: 0,
        n_esc: 0,
        n_arrivals: 0,
        unresolved: 0,
        max_capture_gap: 0.0,
        min_capture_radius: f64::INFINITY,
        events: 0,
        log: options.log.then(Vec::new),
    };
    let counted = |t: f64| t >= config.warmup && t <= config.horizon;

    let mut trajectory = Trajectory::starting(kind.start_position(&env), 0.0);
    let mut generation = 0u64;
    // capture target of the current plan, if any
    let mut pending: Option<TargetId>;
    let mut idle: bool;

    macro_rules! decide {
        ($now:expr) => {{
            let now: f64 = $now;
            let at = trajectory.position(now);
            let plan = policy.decide(&Snapshot::new(now, at, env, &targets, &active));
            generation += 1;
            let installed = install(plan, at, now, generation);
            trajectory = installed.trajectory;
            pending = installed.pending;
            idle = installed.idle;
            queue.extend(installed.event);
        }};
    }

    decide!(0.0);
    let mut last_time = 0.0f64;
    while let Some(ev) = queue.pop() {
        if ev.time > config.horizon {
            break;
        }
        debug_assert!(ev.time >= last_time, "event time went backwards");
        last_time = ev.time;
        metrics.events += 1;
        let now = ev.time;
        let log_event = |metrics: &mut RunMetrics, trajectory: &Trajectory, radius: f64| {
            if let Some(log) = metrics.log.as_mut() {
                log.push(LogEntry {
                    time: now,
                    kind: ev.kind,
                    id: ev.id,
                    vehicle: trajectory.position(now),
                    target_radius: radius,
                });
            }
        };
        match ev.kind {
            EventKind::Arrival => {
                let t = &mut targets[ev.id];
                t.advance(TargetState::Active);
                active.insert(ev.id);
                metrics.n_arrivals += 1;
                if let Some(escape) = t.escape_time(&env) {
                    queue.push(Event { time: escape, kind: EventKind::Escape, id: ev.id, generation: 0 });
                }
                log_event(&mut metrics, &trajectory, env.capital_d);
                if idle || policy.replan_on_arrival(pending.is_some()) {
                    decide!(now);
                }
            }
            EventKind::Escape => {
                let t = &mut targets[ev.id];
                if !t.advance(TargetState::Escaped(now)) {
                    continue;
                }
                active.remove(&ev.id);
                if counted(now) {
                    metrics.n_esc += 1;
                }
                let r = t.radius_at(now, &env);
                log_event(&mut metrics, &trajectory, r);
                if pending == Some(ev.id) {
                    decide!(now);
                }
            }
            EventKind::Capture => {
                if ev.generation != generation {
                    continue;
                }
                let t = &mut targets[ev.id];
                if t.is_active() {
                    let r = t.radius_at(now, &env);
                    let gap = trajectory.position(now).distance(Point::polar(r, t.theta));
                    t.advance(TargetState::Captured(now));
                    active.remove(&ev.id);
                    metrics.max_capture_gap = metrics.max_capture_gap.max(gap);
                    metrics.min_capture_radius = metrics.min_capture_radius.min(r);
                    if counted(now) {
                        metrics.n_capt += 1;
                    }
                    log_event(&mut metrics, &trajectory, r);
                }
                decide!(now);
            }
            EventKind::Decision => {
                if ev.generation == generation {
                    decide!(now);
                }
            }
        }
    }
    metrics.unresolved = active.len();
    Ok(metrics)
}

struct Installed {
    trajectory: Trajectory,
    pending: Option<TargetId>,
    idle: bool,
    event: Option<Event>,
}

/// Turns a plan into the vehicle's new trajectory and the event that ends it.
fn install(plan: Plan, at: Point, now: f64, generation: u64) -> Installed {
    match plan {
        Plan::Idle => Installed {
            trajectory: Trajectory::starting(at, now),
            pending: None,
            idle: true,
            event: None,
        },
        Plan::Maneuver(m) => {
            let end = m.trajectory.end_time();
            let event = match m.capture {
                Some(id) => Some(Event { time: end, kind: EventKind::Capture, id, generation }),
                None if end > now => Some(Event { time: end, kind: EventKind::Decision, id: 0, generation }),
                None => None,
            };
            Installed {
                trajectory: m.trajectory,
                pending: m.capture,
                idle: event.is_none(),
                event,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub policy: PolicyKind,
    pub mean: f64,
    /// Sample standard deviation over the runs that resolved something.
    pub sd: f64,
    /// Half-width of the 95% interval, `1.96·sd/√n`.
    pub ci_half_width: f64,
    pub runs: usize,
    /// Indices of runs with no resolved target.
    pub excluded: Vec<usize>,
    pub per_run: Vec<RunMetrics>,
}

impl Estimate {
    pub fn used(&self) -> usize {
        self.runs - self.excluded.len()
    }

    pub fn ci_low(&self) -> f64 {
        self.mean - self.ci_half_width
    }

    pub fn ci_high(&self) -> f64 {
        self.mean + self.ci_half_width
    }
}

/// Mean, sample standard deviation and 95% half-width. `None` for an empty slice.
pub fn summarize(values: &[f64]) -> Option<(f64, f64, f64)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, 0.0, 0.0));
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    Some((mean, sd, Z_95 * sd / (n as f64).sqrt()))
}

/// Runs `runs` independent replications (seeds derived from the config seed
/// and the run index) in parallel. Results are ordered by run index.
pub fn estimate(config: &SimConfig, policy: PolicyKind, runs: usize) -> Result<Estimate, EngineError> {
    if runs < 2 {
        return Err(EngineError::TooFewRuns(runs));
    }
    config.validate()?;
    let per_run = (0..runs as u64)
        .into_par_iter()
        .map(|i| run_simulation(&config.for_run(i), policy))
        .collect::<Result<Vec<_>, _>>()?;
    let mut fractions = Vec::with_capacity(runs);
    let mut excluded = Vec::new();
    for (i, m) in per_run.iter().enumerate() {
        match m.capture_fraction() {
            Some(f) => fractions.push(f),
            None => excluded.push(i),
        }
    }
    let (mean, sd, ci_half_width) = summarize(&fractions).ok_or(EngineError::NoDefinedRuns { runs })?;
    Ok(Estimate {
        policy,
        mean,
        sd,
        ci_half_width,
        runs,
        excluded,
        per_run,
    })
}

fn check_band(config: &SimConfig, band: (f64, f64), t: f64) -> Result<(), EngineError> {
    let lo = config.rho.max(config.capital_d - config.v * t);
    let hi = config.capital_d;
    let (r1, r2) = band;
    if !(r1 <= r2 && r1 >= lo && r2 <= hi) {
        return Err(EngineError::BandOutsidePopulated { r1, r2, lo, hi });
    }
    Ok(())
}

/// Counts, for each of `runs` replications with no vehicle, the targets at time
/// `t` inside the region `r1 ≤ r ≤ r2`, `θ1 ≤ θ < θ2`.
pub fn no_interception_census(
    config: &SimConfig,
    band: (f64, f64),
    sector: (f64, f64),
    t: f64,
    runs: usize,
) -> Result<Vec<usize>, EngineError> {
    config.validate()?;
    check_band(config, band, t)?;
    let (th1, th2) = sector;
    if !(0.0 <= th1 && th1 <= th2 && th2 <= TAU) {
        return Err(EngineError::Sector(th1, th2));
    }
    if t <= 0.0 {
        return Ok(vec![0; runs]);
    }
    let counts = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = SimConfig {
                horizon: t,
                warmup: 0.0,
                ..config.for_run(i)
            };
            generate_arrivals(&cfg)
                .iter()
                .filter(|a| {
                    let r = cfg.capital_d - cfg.v * (t - a.time);
                    r >= band.0 && r <= band.1 && a.theta >= th1 && a.theta < th2
                })
                .count()
        })
        .collect();
    Ok(counts)
}

/// Steady-state travel-time samples with no interception.
///
/// For each replication the arrival process runs until `t_snapshot`, a vehicle
/// is dropped uniformly (by area) in the annulus `ρ ≤ r ≤ D`, and the sample is
/// the shortest time in which it can intercept any target before the perimeter.
/// Snapshots with nothing catchable are skipped.
pub fn travel_time_samples(config: &SimConfig, t_snapshot: f64, runs: usize) -> Result<Vec<f64>, EngineError> {
    config.validate()?;
    let samples: Vec<Option<f64>> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = SimConfig {
                horizon: t_snapshot,
                warmup: 0.0,
                ..config.for_run(i)
            };
            let mut rng = rng_from_seed(cfg.seed ^ 0x5eed_7ea7_0000_0001);
            let (r2lo, r2hi) = (cfg.rho * cfg.rho, cfg.capital_d * cfg.capital_d);
            let r = (r2lo + (r2hi - r2lo) * rng.gen::<f64>()).sqrt();
            let vehicle = Point::polar(r, TAU * rng.gen::<f64>());
            generate_arrivals(&cfg)
                .iter()
                .filter_map(|a| {
                    let radius = cfg.capital_d - cfg.v * (t_snapshot - a.time);
                    (radius >= cfg.rho).then_some(())?;
                    intercept_time(vehicle, radius, a.theta, cfg.v, cfg.rho).ok()
                })
                .map(|s| s.time_to_intercept)
                .min_by(f64::total_cmp)
        })
        .collect();
    Ok(samples.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Arrival;

    #[test]
    fn tie_order() {
        let mut heap = BinaryHeap::new();
        for (kind, id) in [
            (EventKind::Decision, 0),
            (EventKind::Arrival, 2),
            (EventKind::Escape, 1),
            (EventKind::Capture, 3),
            (EventKind::Arrival, 1),
        ] {
            heap.push(Event { time: 5.0, kind, id, generation: 0 });
        }
        heap.push(Event { time: 4.0, kind: EventKind::Decision, id: 9, generation: 0 });
        let order: Vec<(EventKind, usize)> = std::iter::from_fn(|| heap.pop()).map(|e| (e.kind, e.id)).collect();
        assert_eq!(
            order,
            vec![
                (EventKind::Decision, 9),
                (EventKind::Capture, 3),
                (EventKind::Escape, 1),
                (EventKind::Arrival, 1),
                (EventKind::Arrival, 2),
                (EventKind::Decision, 0),
            ]
        );
    }

    #[test]
    fn zero_rate_is_undefined() {
        let cfg = SimConfig::new(0.0, 0.2, 100.0, 1);
        let m = run_simulation(&cfg, PolicyKind::Fcfs).unwrap();
        assert_eq!((m.n_capt, m.n_esc), (0, 0));
        assert_eq!(m.capture_fraction(), None);
        assert!(matches!(estimate(&cfg, PolicyKind::Fcfs, 3), Err(EngineError::NoDefinedRuns { .. })));
        assert!(matches!(estimate(&cfg, PolicyKind::Fcfs, 1), Err(EngineError::TooFewRuns(1))));
    }

    #[test]
    fn single_target_sac_round_trip() {
        let cfg = SimConfig { warmup: 0.0, ..SimConfig::new(1.0, 0.2, 200.0, 0) };
        let stream = ArrivalStream::from_arrivals(vec![Arrival { time: 1.0, theta: 0.5 }]);
        let m = run_with_arrivals(&cfg, PolicyKind::Sac, &stream, RunOptions { log: true }).unwrap();
        assert_eq!((m.n_capt, m.n_esc), (1, 0));
        let log = m.log.unwrap();
        let cap = log.iter().find(|e| e.kind == EventKind::Capture).unwrap();
        assert!((cap.time - 86.0).abs() < 1e-12);
        assert!((cap.target_radius - 3.0).abs() < 1e-9);
    }

    #[test]
    fn summary_statistics() {
        let (mean, sd, ci) = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(mean, 2.5);
        assert!((sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((ci - 1.96 * sd / 2.0).abs() < 1e-15);
        assert_eq!(summarize(&[]), None);
    }

    #[test]
    fn census_rejects_unpopulated_band() {
        let cfg = SimConfig::new(10.0, 0.5, 100.0, 0);
        assert!(no_interception_census(&cfg, (4.0, 6.0), (0.0, 1.0), 30.0, 1).is_err());
        assert_eq!(no_interception_census(&cfg, (20.0, 20.0), (0.0, 1.0), 0.0, 3).unwrap(), vec![0; 3]);
    }
}

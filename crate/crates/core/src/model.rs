//! Problem parameters, target lifecycle and the seeded Poisson arrival process.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::Point;

pub type TargetId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("lambda must be finite and >= 0, got {0}")]
    Lambda(f64),
    #[error("target speed v must lie in [0, 1), got {0}")]
    Speed(f64),
    #[error("radii must satisfy 0 < rho < capital_d, got rho={rho}, capital_d={capital_d}")]
    Radii { rho: f64, capital_d: f64 },
    #[error("horizon must be > 0, got {0}")]
    Horizon(f64),
    #[error("warmup must satisfy 0 <= warmup < horizon, got warmup={warmup}, horizon={horizon}")]
    Warmup { warmup: f64, horizon: f64 },
}

/// Parameters of one experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Arrival rate, targets per unit time.
    pub lambda: f64,
    /// Target speed as a fraction of the vehicle speed.
    pub v: f64,
    /// Perimeter radius.
    pub rho: f64,
    /// Generation radius.
    pub capital_d: f64,
    pub horizon: f64,
    /// Events resolved before this time are not counted.
    pub warmup: f64,
    pub seed: u64,
}

impl SimConfig {
    pub const DEFAULT_RHO: f64 = 3.0;
    pub const DEFAULT_CAPITAL_D: f64 = 20.0;
    pub const DEFAULT_WARMUP_FRACTION: f64 = 0.2;

    /// Config with the default radii and warm-up.
    pub fn new(lambda: f64, v: f64, horizon: f64, seed: u64) -> Self {
        Self {
            lambda,
            v,
            rho: Self::DEFAULT_RHO,
            capital_d: Self::DEFAULT_CAPITAL_D,
            horizon,
            warmup: Self::DEFAULT_WARMUP_FRACTION * horizon,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(ConfigError::Lambda(self.lambda));
        }
        if !(0.0..1.0).contains(&self.v) {
            return Err(ConfigError::Speed(self.v));
        }
        if !(self.rho > 0.0 && self.rho < self.capital_d && self.capital_d.is_finite()) {
            return Err(ConfigError::Radii {
                rho: self.rho,
                capital_d: self.capital_d,
            });
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(ConfigError::Horizon(self.horizon));
        }
        if !(self.warmup >= 0.0 && self.warmup < self.horizon) {
            return Err(ConfigError::Warmup {
                warmup: self.warmup,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    pub fn environment(&self) -> Environment {
        Environment {
            v: self.v,
            rho: self.rho,
            capital_d: self.capital_d,
        }
    }

    /// Same config with the seed for run `index` of a sweep.
    pub fn for_run(&self, index: u64) -> Self {
        Self {
            seed: run_seed(self.seed, index),
            ..*self
        }
    }
}

/// The geometric part of a config: what every kinematic query needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    pub v: f64,
    pub rho: f64,
    pub capital_d: f64,
}

impl Environment {
    /// Time a target needs to cross from the generation circle to the perimeter.
    pub fn crossing_time(&self) -> Option<f64> {
        (self.v > 0.0).then(|| (self.capital_d - self.rho) / self.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetState {
    Pending,
    Active,
    Captured(f64),
    Escaped(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub id: TargetId,
    pub theta: f64,
    pub arrival_time: f64,
    state: TargetState,
}

impl Target {
    pub fn new(id: TargetId, theta: f64, arrival_time: f64) -> Self {
        Self {
            id,
            theta,
            arrival_time,
            state: TargetState::Pending,
        }
    }

    pub fn state(&self) -> TargetState {
        self.state
    }

    pub fn is_active(&self) -> bool {
        self.state == TargetState::Active
    }

    /// Moves the lifecycle forward. Backward or sideways transitions
    /// (e.g. captured → escaped) are refused and return `false`.
    pub fn advance(&mut self, next: TargetState) -> bool {
        let ok = matches!(
            (self.state, next),
            (TargetState::Pending, TargetState::Active)
                | (TargetState::Active, TargetState::Captured(_) | TargetState::Escaped(_))
        );
        if ok {
            self.state = next;
        }
        ok
    }

    /// Radius along the linear law, without any lifecycle check.
    pub fn radius_at(&self, t: f64, env: &Environment) -> f64 {
        env.capital_d - env.v * (t - self.arrival_time)
    }

    /// Position while the target is in the environment, `None` before it arrives
    /// or once it has passed the perimeter.
    pub fn position_at(&self, t: f64, env: &Environment) -> Option<Point> {
        let r = self.radius_at(t, env);
        (t >= self.arrival_time && r >= env.rho).then(|| Point::polar(r, self.theta))
    }

    /// `None` for static targets, which never reach the perimeter.
    pub fn escape_time(&self, env: &Environment) -> Option<f64> {
        env.crossing_time().map(|c| self.arrival_time + c)
    }
}

pub fn target_position(target: &Target, t: f64, env: &Environment) -> Option<Point> {
    target.position_at(t, env)
}

pub fn escape_time(target: &Target, env: &Environment) -> Option<f64> {
    target.escape_time(env)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub theta: f64,
}

/// All arrivals of one run, in time order. Index `i` is target id `i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArrivalStream {
    arrivals: Vec<Arrival>,
}

impl ArrivalStream {
    pub fn from_arrivals(mut arrivals: Vec<Arrival>) -> Self {
        arrivals.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self { arrivals }
    }

    pub fn as_slice(&self) -> &[Arrival] {
        &self.arrivals
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arrival> {
        self.arrivals.iter()
    }

    pub fn targets(&self) -> Vec<Target> {
        self.arrivals
            .iter()
            .enumerate()
            .map(|(id, a)| Target::new(id, a.theta, a.time))
            .collect()
    }

    /// Arrivals strictly before `t`.
    pub fn truncated(&self, t: f64) -> Self {
        let n = self.arrivals.partition_point(|a| a.time < t);
        Self {
            arrivals: self.arrivals[..n].to_vec(),
        }
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for run `index` of an experiment seeded with `base`.
pub fn run_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Samples the Poisson arrival process on `[0, horizon]`.
///
/// Each arrival consumes two uniforms from the run's generator: first the
/// inter-arrival gap (inverse CDF of the exponential law), then the angle.
pub fn generate_arrivals(config: &SimConfig) -> ArrivalStream {
    let mut arrivals = Vec::new();
    if config.lambda <= 0.0 {
        return ArrivalStream { arrivals };
    }
    let mut rng = rng_from_seed(config.seed);
    let mut t = 0.0;
    loop {
        let u: f64 = rng.gen();
        t += -(1.0 - u).ln() / config.lambda;
        let theta = TAU * rng.gen::<f64>();
        if t > config.horizon {
            break;
        }
        arrivals.push(Arrival { time: t, theta });
    }
    ArrivalStream { arrivals }
}

//! Planar kinematics for a unit-speed vehicle chasing radially inward-moving targets.
//!
//! Angles are radians, lengths and times share units (the vehicle moves at speed 1).

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(radius: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(radius * c, radius * s)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Polar angle normalized to `[0, 2π)`.
    pub fn angle(self) -> f64 {
        normalize_angle(self.y.atan2(self.x))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("intercept at t={time} happens at radius {radius}, inside the perimeter")]
    InfeasibleBeforePerimeter { time: f64, radius: f64 },
    #[error("leg {leg} would require the target to pass through the center (radius {radius})")]
    RadiusBelowZero { leg: usize, radius: f64 },
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let a = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Angular distance on the circle, in `[0, π]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TAU);
    d.min(TAU - d)
}

/// Signed sweep of the shorter arc from `from` to `to`, in `[-π, π]`.
pub fn shortest_sweep(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterceptSolution {
    pub time_to_intercept: f64,
    pub intercept_point: Point,
    /// Target radius at the intercept instant. Negative means the root lies past the center.
    pub radius: f64,
}

/// Smallest `T >= 0` with `|q(T) - p| = T`, where `q(T) = (r0 - vT)(cos θ, sin θ)`.
///
/// Pure kinematics: the perimeter is not consulted. The nonnegative root of
/// `(1 - v²)T² - 2v(c - r0)T - |r0·u - p|² = 0` always exists for `v < 1`.
pub fn solve_intercept(vehicle: Point, r0: f64, theta: f64, v: f64) -> InterceptSolution {
    debug_assert!((0.0..1.0).contains(&v), "target speed must be in [0, 1)");
    let u = Point::polar(1.0, theta);
    let c = vehicle.dot(u);
    let a = 1.0 - v * v;
    let b = 2.0 * v * (c - r0);
    let k = (u * r0 - vehicle).dot(u * r0 - vehicle);
    let disc = (b * b + 4.0 * a * k).sqrt();
    // pick the cancellation-free form of the positive root
    let t = if b >= 0.0 {
        (b + disc) / (2.0 * a)
    } else if disc - b > 0.0 {
        2.0 * k / (disc - b)
    } else {
        0.0
    };
    let radius = r0 - v * t;
    InterceptSolution {
        time_to_intercept: t,
        intercept_point: u * radius,
        radius,
    }
}

/// Interception that must complete before the target reaches the perimeter of radius `rho`.
pub fn intercept_time(
    vehicle: Point,
    r0: f64,
    theta: f64,
    v: f64,
    rho: f64,
) -> Result<InterceptSolution, GeometryError> {
    let sol = solve_intercept(vehicle, r0, theta, v);
    if sol.radius < rho {
        return Err(GeometryError::InfeasibleBeforePerimeter {
            time: sol.time_to_intercept,
            radius: sol.radius,
        });
    }
    Ok(sol)
}

/// Radius of the capturable boundary for a vehicle at `(x, 0)`.
pub fn capturable_radius(x: f64, v: f64, rho: f64, theta: f64, capital_d: f64) -> f64 {
    let chord = (rho * rho + x * x - 2.0 * x * rho * theta.cos()).max(0.0).sqrt();
    capital_d.min(rho + v * chord)
}

/// Strict membership: targets on the boundary `r = r_c` are not capturable.
pub fn in_capturable_set(x: f64, v: f64, rho: f64, target_r: f64, target_theta: f64, capital_d: f64) -> bool {
    target_r < capturable_radius(x, v, rho, target_theta, capital_d)
}

/// Whether a perimeter-constrained vehicle at angle `phi` can meet the target where it
/// crosses the perimeter. The boundary case is reachable.
pub fn is_reachable(phi: f64, target_r: f64, target_theta: f64, v: f64, rho: f64) -> bool {
    target_r - rho >= v * angular_distance(target_theta, phi) * rho
}

/// Sum of consecutive Euclidean distances.
///
/// Panics on an empty sequence.
pub fn static_path_length(points: &[Point]) -> f64 {
    assert!(!points.is_empty(), "static_path_length needs at least one point");
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Unrolls the annulus onto a rectangle: `(θρ, r − ρ)`.
pub fn annulus_to_rectangle(r: f64, theta: f64, rho: f64) -> Point {
    Point::new(theta * rho, r - rho)
}

/// Inverse of [`annulus_to_rectangle`], returning `(r, θ)`.
pub fn rectangle_to_annulus(p: Point, rho: f64) -> (f64, f64) {
    (p.y + rho, p.x / rho)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialIntercept {
    pub total_time: f64,
    /// Duration of each leg, in visiting order.
    pub legs: Vec<f64>,
    pub final_position: Point,
}

/// Intercepts `targets` (given as `(radius, θ)` at the start) one after another.
/// Each leg sees the target advanced by all earlier legs.
pub fn sequential_intercept_time(
    vehicle: Point,
    targets: &[(f64, f64)],
    v: f64,
) -> Result<SequentialIntercept, GeometryError> {
    let mut elapsed = 0.0;
    let mut pos = vehicle;
    let mut legs = Vec::with_capacity(targets.len());
    for (leg, &(r, theta)) in targets.iter().enumerate() {
        let current = r - v * elapsed;
        let sol = solve_intercept(pos, current, theta, v);
        if current < 0.0 || sol.radius < 0.0 {
            return Err(GeometryError::RadiusBelowZero {
                leg,
                radius: sol.radius.min(current),
            });
        }
        elapsed += sol.time_to_intercept;
        legs.push(sol.time_to_intercept);
        pos = sol.intercept_point;
    }
    Ok(SequentialIntercept {
        total_time: elapsed,
        legs,
        final_position: pos,
    })
}

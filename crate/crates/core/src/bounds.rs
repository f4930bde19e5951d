//! Closed-form capture-fraction bounds and the error function they need.

use std::f64::consts::{PI, SQRT_2};

use thiserror::Error;

/// Constant in the large-λ tour-length lower bound for the RMHP policy.
pub const RMHP_ALPHA: f64 = 6.0 * SQRT_2;
/// Sharper constant from the asymptotic EMHP tour length.
pub const RMHP_ALPHA_IMPROVED: f64 = 3.988 / SQRT_2;
/// Beardwood–Halton–Hammersley constant.
pub const BETA_TSP: f64 = 0.7120;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("bound needs capital_d - rho >= v*pi*rho (got {capital_d} - {rho} < {v}*pi*{rho})")]
    TheoremInapplicable { v: f64, rho: f64, capital_d: f64 },
}

/// Error function, Abramowitz & Stegun 7.1.26 (|error| ≤ 1.5e-7).
pub fn erf(x: f64) -> f64 {
    const P: f64 = 0.327_591_1;
    const A: [f64; 5] = [
        0.254_829_592,
        -0.284_496_736,
        1.421_413_741,
        -1.453_152_027,
        1.061_405_429,
    ];
    if x == 0.0 || x.is_nan() {
        return x;
    }
    let ax = x.abs();
    let t = 1.0 / (1.0 + P * ax);
    let poly = t * (A[0] + t * (A[1] + t * (A[2] + t * (A[3] + t * A[4]))));
    let y = 1.0 - poly * (-ax * ax).exp();
    if x.is_sign_negative() {
        -y
    } else {
        y
    }
}

/// Whether the perimeter-constrained bounds apply: `D - ρ ≥ vπρ`.
pub fn look_ahead_applicable(v: f64, rho: f64, capital_d: f64) -> bool {
    capital_d - rho >= v * PI * rho
}

/// Best capture fraction any policy can achieve. Saturates at 1, including
/// the degenerate cases λ = 0 and v = 0.
pub fn upper_bound(lambda: f64, v: f64, rho: f64) -> f64 {
    if lambda <= 0.0 || v <= 0.0 {
        return 1.0;
    }
    ((1.0 + v) * (2.0 / (v * lambda * PI * rho)).sqrt()).min(1.0)
}

/// Arrival rate at which [`upper_bound`] leaves 1.
pub fn upper_bound_saturation(v: f64, rho: f64) -> f64 {
    2.0 * (1.0 + v).powi(2) / (v * PI * rho)
}

pub fn fcfs_lower_bound(lambda: f64, rho: f64) -> f64 {
    1.0 / (1.0 + 2.0 * lambda * rho)
}

/// Explicit look-ahead guarantee. Independent of v; only meaningful when
/// [`look_ahead_applicable`] holds.
pub fn la_lower_bound(lambda: f64, rho: f64) -> f64 {
    let lr = lambda * rho;
    1.0 / (PI * lr.sqrt() * erf((lr * PI).sqrt()) + (-lr * PI).exp())
}

/// Factor relating the causal look-ahead fraction to the non-causal one.
pub fn la_ncla_factor(v: f64, rho: f64, capital_d: f64) -> Result<f64, BoundsError> {
    if !look_ahead_applicable(v, rho, capital_d) {
        return Err(BoundsError::TheoremInapplicable { v, rho, capital_d });
    }
    Ok(1.0 - v * PI * rho / (capital_d - rho))
}

pub fn la_relative_bound(
    v: f64,
    rho: f64,
    capital_d: f64,
    ncla_fraction: f64,
) -> Result<f64, BoundsError> {
    Ok(la_ncla_factor(v, rho, capital_d)? * ncla_fraction)
}

fn rmhp_bound_with(alpha: f64, lambda: f64, v: f64, rho: f64) -> f64 {
    if lambda <= 0.0 || v <= 0.0 {
        return 1.0;
    }
    ((1.0 - v) / (alpha * (v * lambda * rho * (1.0 + v.sqrt())).sqrt())).min(1.0)
}

/// Large-λ guarantee of the repeated-tour policy.
pub fn rmhp_lower_bound(lambda: f64, v: f64, rho: f64) -> f64 {
    rmhp_bound_with(RMHP_ALPHA, lambda, v, rho)
}

/// Expected time between consecutive captures is at least this.
pub fn travel_time_lower_bound(lambda: f64, v: f64, rho: f64) -> f64 {
    (PI * v * rho / (2.0 * lambda)).sqrt() / (1.0 + v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityRatio {
    pub ratio: f64,
    pub improved_ratio: f64,
    /// False when either bound is saturated at 1, where the ratio says nothing.
    pub informative: bool,
}

/// Upper bound over the RMHP guarantee, with the standard and the sharper tour constant.
pub fn optimality_ratio(lambda: f64, v: f64, rho: f64) -> OptimalityRatio {
    let upper = upper_bound(lambda, v, rho);
    let lower = rmhp_lower_bound(lambda, v, rho);
    let improved = rmhp_bound_with(RMHP_ALPHA_IMPROVED, lambda, v, rho);
    OptimalityRatio {
        ratio: upper / lower,
        improved_ratio: upper / improved,
        informative: upper < 1.0 && lower < 1.0 && improved < 1.0,
    }
}

/// Length of a path through `n` points in a square of side `side` never exceeds this.
pub fn few_bound(n: usize, side: f64) -> f64 {
    side * (2.0 * n as f64).sqrt() + 1.75 * side
}

/// Every bound at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub lambda: f64,
    pub upper: f64,
    pub fcfs_lower: f64,
    /// `None` when `D - ρ < vπρ`.
    pub la_lower: Option<f64>,
    pub la_ncla_factor: Option<f64>,
    pub rmhp_lower: f64,
    pub travel_time_lb: f64,
    pub ratio: OptimalityRatio,
    /// λ = 0 or v = 0: the upper bound is 1 by convention.
    pub degenerate: bool,
}

impl BoundReport {
    pub fn evaluate(lambda: f64, v: f64, rho: f64, capital_d: f64) -> Self {
        let applicable = look_ahead_applicable(v, rho, capital_d);
        Self {
            lambda,
            upper: upper_bound(lambda, v, rho),
            fcfs_lower: fcfs_lower_bound(lambda, rho),
            la_lower: applicable.then(|| la_lower_bound(lambda, rho)),
            la_ncla_factor: la_ncla_factor(v, rho, capital_d).ok(),
            rmhp_lower: rmhp_lower_bound(lambda, v, rho),
            travel_time_lb: travel_time_lower_bound(lambda, v, rho),
            ratio: optimality_ratio(lambda, v, rho),
            degenerate: lambda <= 0.0 || v <= 0.0,
        }
    }

    pub fn look_ahead_applicable(&self) -> bool {
        self.la_lower.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // mpmath, 15 digits
    const ERF_TABLE: [(f64, f64); 6] = [
        (0.1, 0.112462916018285),
        (0.5, 0.520499877813047),
        (1.0, 0.842700792949715),
        (1.5, 0.966105146475311),
        (2.0, 0.995322265018953),
        (3.0, 0.999977909503001),
    ];

    #[test]
    fn erf_reference_values() {
        assert_eq!(erf(0.0), 0.0);
        for (x, want) in ERF_TABLE {
            assert!(close(erf(x), want, 1.5e-7), "erf({x})");
            assert_eq!(erf(-x), -erf(x));
        }
        assert!(close(erf(6.0), 1.0, 1e-15));
    }

    #[test]
    fn erf_odd_and_monotone() {
        let mut prev = -1.0f64;
        for i in 0..=10_000 {
            let x = -5.0 + 10.0 * i as f64 / 10_000.0;
            let y = erf(x);
            assert_eq!(erf(-x), -y);
            assert!(y >= prev, "not monotone at {x}");
            assert!((-1.0..=1.0).contains(&y));
            prev = y;
        }
    }

    #[test]
    fn upper_bound_values() {
        assert!(close(upper_bound(5.0, 0.2, 3.0), 0.552790639154137, 1e-12));
        assert_eq!(upper_bound(0.0, 0.2, 3.0), 1.0);
        assert_eq!(upper_bound(1.0, 0.0, 3.0), 1.0);
        assert_eq!(upper_bound(1e-9, 0.2, 3.0), 1.0);
        let sat = upper_bound_saturation(0.2, 3.0);
        assert!(close(sat, 1.5278874536822, 1e-12));
        assert_eq!(upper_bound(0.99 * sat, 0.2, 3.0), 1.0);
        assert!(upper_bound(1.01 * sat, 0.2, 3.0) < 1.0);
    }

    #[test]
    fn policy_lower_bounds() {
        assert_eq!(fcfs_lower_bound(0.0, 3.0), 1.0);
        assert!(close(fcfs_lower_bound(1.0, 3.0), 1.0 / 7.0, 1e-15));
        assert!(fcfs_lower_bound(2.0, 3.0) < fcfs_lower_bound(1.0, 3.0));
        assert_eq!(la_lower_bound(0.0, 3.0), 1.0);
        for (lambda, want) in [
            (0.5, 0.259848518561755),
            (1.0, 0.183776172356441),
            (2.0, 0.129949466869568),
        ] {
            assert!(close(la_lower_bound(lambda, 3.0), want, 1e-6), "la {lambda}");
        }
        assert!(close(rmhp_lower_bound(100.0, 0.04, 3.0), 0.0298142396999972, 1e-12));
        assert!(rmhp_lower_bound(1.0, 1.0 - 1e-12, 3.0) < 1e-10);
        assert!(close(travel_time_lower_bound(5.0, 0.2, 3.0), 0.361800627279134, 1e-12));
        assert_eq!(few_bound(0, 2.0), 3.5);
        assert_eq!(few_bound(2, 1.0), 3.75);
    }

    #[test]
    fn relative_bound() {
        assert_eq!(la_relative_bound(0.0, 3.0, 20.0, 0.4), Ok(0.4));
        assert!(close(la_ncla_factor(0.8, 3.0, 20.0).unwrap(), 0.556481037140264, 1e-12));
        let v = 1.0 / PI; // D - ρ = vπρ exactly when D = 6
        assert!(la_ncla_factor(v, 3.0, 6.0).unwrap().abs() < 1e-12);
        assert!(matches!(
            la_relative_bound(0.999, 3.0, 4.0, 0.5),
            Err(BoundsError::TheoremInapplicable { .. })
        ));
    }

    #[test]
    fn ratio_limits() {
        let r = optimality_ratio(1e8, 1e-6, 3.0);
        assert!(r.informative);
        assert!((r.ratio / 6.77027500257308 - 1.0).abs() < 0.01);
        assert!((r.improved_ratio / 2.24998805918845 - 1.0).abs() < 0.01);
        let moderate = optimality_ratio(50.0, 0.5, 3.0);
        assert!(moderate.ratio.is_finite() && moderate.ratio > 1.0);
        assert!(!optimality_ratio(0.01, 0.5, 3.0).informative);
    }

    #[test]
    fn bounds_are_ordered_on_grid() {
        for &v in &[0.01, 0.04, 0.2, 0.5, 0.8, 0.99] {
            for &lambda in &[0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0, 1e4] {
                let rep = BoundReport::evaluate(lambda, v, 3.0, 20.0);
                assert!(rep.fcfs_lower <= rep.upper + 1e-15);
                assert!(rep.rmhp_lower <= rep.upper + 1e-15);
                if let Some(la) = rep.la_lower {
                    assert!(la <= rep.upper + 1e-15, "la at λ={lambda} v={v}");
                }
                for f in [rep.upper, rep.fcfs_lower, rep.rmhp_lower] {
                    assert!((0.0..=1.0).contains(&f));
                }
                assert!(rep.travel_time_lb >= 0.0);
                if rep.upper < 1.0 {
                    assert!(lambda * rep.travel_time_lb * rep.upper <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn report_flags() {
        assert!(BoundReport::evaluate(0.0, 0.2, 3.0, 20.0).degenerate);
        assert!(BoundReport::evaluate(1.0, 0.8, 3.0, 20.0).look_ahead_applicable());
        assert!(!BoundReport::evaluate(1.0, 0.999, 3.0, 4.0).look_ahead_applicable());
    }
}

//! Sextic potential, obstruction geometry, and the stability quantities the
//! rest of the crate is built on.
//!
//! The theory is U(f) = 2f² − 2f⁴ + f⁶ in dimensionless field units.
//! Obstructions rescale the potential by λ̃ = 1 + λ₀ inside a region of
//! space: λ₀ > 0 is a barrier, −1 < λ₀ < 0 a hole.

use crate::error::{Bound, Error, Result};
use serde::{Deserialize, Serialize};

/// Base potential coefficients for |Φ|², |Φ|⁴, |Φ|⁶. Fixed constants of the theory.
pub const BASE_COEFFS: (f64, f64, f64) = (2.0, -2.0, 1.0);

/// U(f; λ̃) = λ̃ (2f² − 2f⁴ + f⁶).
///
/// Positive for all f ≠ 0 when λ̃ > 0 since 2 − 2f² + f⁴ = (f²−1)² + 1 > 0.
#[inline]
pub fn potential_value(f: f64, lambda: f64) -> f64 {
    let f2 = f * f;
    lambda * f2 * (2.0 + f2 * (f2 - 2.0))
}

/// dU/df = λ̃ (4f − 8f³ + 6f⁵).
#[inline]
pub fn potential_deriv(f: f64, lambda: f64) -> f64 {
    let f2 = f * f;
    lambda * f * (4.0 + f2 * (6.0 * f2 - 8.0))
}

/// Scalar mass m = 2√λ̃. The stability criterion used elsewhere is E/Q < m.
#[inline]
pub fn stability_mass(lambda: f64) -> f64 {
    2.0 * lambda.sqrt()
}

/// Frequency window in which stationary q-balls exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaRange {
    pub lo: f64,
    pub hi: f64,
}

impl OmegaRange {
    /// Existence is symmetric in the sign of ω (anti-q-balls).
    pub fn contains(&self, omega: f64) -> bool {
        let w = omega.abs();
        self.lo < w && w < self.hi
    }
}

/// Existence window (√(2λ̃), 2√λ̃); at λ̃ = 1 this is (√2, 2).
///
/// The upper bound is where U″_eff(0) = ω² − 4λ̃ changes sign; both bounds
/// scale as √λ̃ because every term of the potential carries one power of λ̃.
pub fn omega_bounds(lambda: f64) -> OmegaRange {
    OmegaRange {
        lo: (2.0 * lambda).sqrt(),
        hi: 2.0 * lambda.sqrt(),
    }
}

/// Check ω against the existence window for the given λ̃, reporting which
/// bound failed.
pub fn check_omega(omega: f64, lambda: f64) -> Result<()> {
    let range = omega_bounds(lambda);
    let w = omega.abs();
    if !(w > range.lo) {
        return Err(Error::OmegaOutOfRange {
            omega,
            lo: range.lo,
            hi: range.hi,
            bound: Bound::Lower,
        });
    }
    if !(w < range.hi) {
        return Err(Error::OmegaOutOfRange {
            omega,
            lo: range.lo,
            hi: range.hi,
            bound: Bound::Upper,
        });
    }
    Ok(())
}

/// A single circular obstruction region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

/// Spatial support of an obstruction. Boundaries are inclusive; there is no
/// smoothing ramp at the edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    None,
    Interval { lo: f64, hi: f64 },
    Disk { center: [f64; 2], radius: f64 },
    Disks { disks: Vec<Disk> },
}

impl Region {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Region::None => false,
            Region::Interval { lo, hi } => *lo <= p[0] && p[0] <= *hi,
            Region::Disk { center, radius } => Disk {
                center: *center,
                radius: *radius,
            }
            .contains(p),
            Region::Disks { disks } => disks.iter().any(|d| d.contains(p)),
        }
    }

    /// Extent along x, used by outcome classification.
    pub fn x_extent(&self) -> Option<(f64, f64)> {
        match self {
            Region::None => None,
            Region::Interval { lo, hi } => Some((*lo, *hi)),
            Region::Disk { center, radius } => Some((center[0] - radius, center[0] + radius)),
            Region::Disks { disks } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for d in disks {
                    lo = lo.min(d.center[0] - d.radius);
                    hi = hi.max(d.center[0] + d.radius);
                }
                (lo <= hi).then_some((lo, hi))
            }
        }
    }
}

/// Where and how strongly the potential is rescaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionSpec {
    /// λ₀ > −1. Inside the region λ̃ = 1 + λ₀, outside exactly 1.
    pub lambda0: f64,
    pub region: Region,
}

/// Default 1d obstruction interval, following the reference setup.
pub const DEFAULT_INTERVAL: (f64, f64) = (-10.0, 10.0);

/// Default 2d obstruction radius.
pub const DEFAULT_RADIUS: f64 = 5.0;

impl ObstructionSpec {
    pub fn none() -> Self {
        Self {
            lambda0: 0.0,
            region: Region::None,
        }
    }

    /// 1d obstruction on the default interval [−10, 10].
    pub fn interval_1d(lambda0: f64) -> Self {
        Self {
            lambda0,
            region: Region::Interval {
                lo: DEFAULT_INTERVAL.0,
                hi: DEFAULT_INTERVAL.1,
            },
        }
    }

    /// 2d disk of the default radius 5 centered at (cx, cy).
    pub fn disk_2d(lambda0: f64, cx: f64, cy: f64) -> Self {
        Self {
            lambda0,
            region: Region::Disk {
                center: [cx, cy],
                radius: DEFAULT_RADIUS,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda0.is_finite() || self.lambda0 <= -1.0 {
            return Err(Error::InvalidParameter {
                name: "lambda0",
                value: self.lambda0,
                reason: "must be finite and > -1",
            });
        }
        match &self.region {
            Region::None => Ok(()),
            Region::Interval { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::Config(format!(
                        "interval [{lo}, {hi}] is not a valid region"
                    )));
                }
                Ok(())
            }
            Region::Disk { center, radius } => {
                validate_disk(&Disk {
                    center: *center,
                    radius: *radius,
                })
            }
            Region::Disks { disks } => {
                if disks.is_empty() {
                    return Err(Error::Config("disk union must be non-empty".into()));
                }
                disks.iter().try_for_each(validate_disk)
            }
        }
    }

    /// True when this obstruction lowers the potential somewhere.
    pub fn is_hole(&self) -> bool {
        self.lambda0 < 0.0 && !matches!(self.region, Region::None)
    }

    /// λ̃ inside the region.
    pub fn lambda_inside(&self) -> f64 {
        match self.region {
            Region::None => 1.0,
            _ => 1.0 + self.lambda0,
        }
    }
}

fn validate_disk(d: &Disk) -> Result<()> {
    if !(d.radius.is_finite() && d.radius > 0.0)
        || !d.center[0].is_finite()
        || !d.center[1].is_finite()
    {
        return Err(Error::Config(format!(
            "disk at {:?} with radius {} is not a valid region",
            d.center, d.radius
        )));
    }
    Ok(())
}

/// λ̃ at a point: 1 + λ₀ inside the region (boundary inclusive), exactly 1.0
/// outside. A hard step, no smoothing.
#[inline]
pub fn lambda_at(p: [f64; 2], obs: &ObstructionSpec) -> f64 {
    if obs.region.contains(p) {
        1.0 + obs.lambda0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_reference_values() {
        assert_eq!(potential_value(0.0, 1.0), 0.0);
        assert_eq!(potential_value(1.0, 1.0), 1.0); // 2 - 2 + 1
        assert!((potential_value(1.0, 1.1) - 1.1).abs() < 1e-15);
        assert_eq!(potential_deriv(0.0, 1.0), 0.0);
        assert_eq!(potential_deriv(1.0, 1.0), 2.0); // 4 - 8 + 6
    }

    #[test]
    fn potential_deriv_matches_central_difference() {
        // Central difference oracle, h = 1e-5, relative error below 1e-8.
        let h = 1e-5;
        for &lam in &[0.1, 1.0, 1.1, 1.9] {
            for i in 1..=12 {
                let f = 0.1 * i as f64;
                let fd = (potential_value(f + h, lam) - potential_value(f - h, lam)) / (2.0 * h);
                let exact = potential_deriv(f, lam);
                assert!(
                    (fd - exact).abs() <= 1e-8 * exact.abs().max(1.0),
                    "f={f} lam={lam}: fd={fd} exact={exact}"
                );
            }
        }
    }

    #[test]
    fn potential_positive_away_from_zero() {
        for i in 1..200 {
            let f = 0.01 * i as f64;
            assert!(potential_value(f, 0.3) > 0.0);
        }
    }

    #[test]
    fn lambda_step_values() {
        let barrier = ObstructionSpec::interval_1d(0.1);
        assert_eq!(lambda_at([0.0, 0.0], &barrier), 1.1);
        assert_eq!(lambda_at([12.0, 0.0], &barrier), 1.0);
        // Boundary is inclusive.
        assert_eq!(lambda_at([10.0, 0.0], &barrier), 1.1);
        assert_eq!(lambda_at([10.0 + 1e-12, 0.0], &barrier), 1.0);

        let hole = ObstructionSpec::disk_2d(-0.9, 0.0, 11.5);
        assert!((lambda_at([0.0, 11.5], &hole) - 0.1).abs() < 1e-15);
        assert_eq!(lambda_at([0.0, 0.0], &hole), 1.0);
    }

    #[test]
    fn lambda_none_is_identity() {
        let none = ObstructionSpec::none();
        for i in -50..50 {
            let p = [0.37 * i as f64, -0.11 * i as f64];
            assert_eq!(lambda_at(p, &none), 1.0);
        }
    }

    #[test]
    fn stability_mass_values() {
        assert!((stability_mass(1.0) - 2.0).abs() < 1e-15);
        assert!((stability_mass(1.1) - 2.0976).abs() < 1e-4);
        assert!((stability_mass(0.1) - 0.6325).abs() < 1e-4);
        assert!((stability_mass(0.9) - 1.8974).abs() < 1e-4);
    }

    #[test]
    fn omega_bounds_values() {
        let r = omega_bounds(1.0);
        assert!((r.lo - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((r.hi - 2.0).abs() < 1e-15);
        assert!(r.contains(1.9));
        assert!(r.contains(-1.9));
        assert!(!r.contains(2.0));
        assert!(!r.contains(1.4));

        let r4 = omega_bounds(4.0);
        assert!((r4.lo - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-14);
        assert!((r4.hi - 4.0).abs() < 1e-14);
    }

    #[test]
    fn effective_potential_curvature_matches_upper_bound() {
        // U''_eff(0) = omega^2 - 4*lambda is negative exactly when omega < 2*sqrt(lambda).
        for &lam in &[0.1, 0.9, 1.0, 1.1, 2.0] {
            let hi = omega_bounds(lam).hi;
            for &omega in &[hi - 1e-6, hi + 1e-6] {
                let curv = omega * omega - 4.0 * lam;
                assert_eq!(curv < 0.0, omega < hi);
            }
        }
    }

    #[test]
    fn check_omega_reports_failing_bound() {
        match check_omega(1.2, 1.0) {
            Err(Error::OmegaOutOfRange { bound, .. }) => assert_eq!(bound, Bound::Lower),
            other => panic!("expected lower-bound error, got {other:?}"),
        }
        match check_omega(2.3, 1.0) {
            Err(Error::OmegaOutOfRange { bound, .. }) => assert_eq!(bound, Bound::Upper),
            other => panic!("expected upper-bound error, got {other:?}"),
        }
        assert!(check_omega(1.9, 1.0).is_ok());
    }

    #[test]
    fn obstruction_validation() {
        assert!(ObstructionSpec::interval_1d(-1.0).validate().is_err());
        assert!(ObstructionSpec::interval_1d(0.5).validate().is_ok());
        let bad = ObstructionSpec {
            lambda0: 0.1,
            region: Region::Disk {
                center: [0.0, 0.0],
                radius: -1.0,
            },
        };
        assert!(bad.validate().is_err());
    }
}

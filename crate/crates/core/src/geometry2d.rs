//! Exact area of the intersection of a disk with the planar Voronoi cell.
//!
//! For `0 < δ ≤ 1` the cell is a hexagon bounded by four bisectors of type 1
//! (neighbours `±e₁^δ, ±e₂^δ`, distance `r₁`) and two of type 2 (neighbours
//! `±(e₁^δ + e₂^δ)`, distance `r₂`); all six vertices lie at distance `r₃`.
//! Below `r₃` the circular segments cut off by the bisectors are disjoint.
//!
//! The planar lattice for `δ` is a rotated copy of the lattice for `1/δ`
//! scaled by `δ`, so every entry point reduces `δ > 1` to `1/δ`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{check_radius, Error, Result};
use crate::numeric::bisect_last_below;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalRadii2D {
    pub delta: f64,
    /// Distance of the four type-1 bisectors.
    pub r1: f64,
    /// Distance of the two type-2 bisectors.
    pub r2: f64,
    /// Distance of the six cell vertices (the covering radius).
    pub r3: f64,
}

impl CriticalRadii2D {
    /// Packing radius `min(r₁, r₂)`.
    pub fn packing(&self) -> f64 {
        self.r1.min(self.r2)
    }
}

pub fn critical_radii_2d(delta: f64) -> Result<CriticalRadii2D> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidDelta(delta));
    }
    if delta > 1.0 {
        return Err(Error::DeltaOutOfRange {
            delta,
            range: "(0, 1]",
        });
    }
    let s = 2.0 * 2f64.sqrt();
    Ok(CriticalRadii2D {
        delta,
        r1: (delta * delta + 1.0).sqrt() / s,
        r2: delta / 2f64.sqrt(),
        r3: (delta * delta + 1.0) / s,
    })
}

/// Critical radii for any `δ > 0`; for `δ > 1` these are the radii of `1/δ`
/// scaled by `δ` (same bisector types, same multiplicities).
pub fn critical_radii_2d_scaled(delta: f64) -> Result<CriticalRadii2D> {
    let (reduced, scale) = reduce(delta)?;
    let c = critical_radii_2d(reduced)?;
    Ok(CriticalRadii2D {
        delta,
        r1: c.r1 * scale,
        r2: c.r2 * scale,
        r3: c.r3 * scale,
    })
}

// (δ', λ) with δ' ≤ 1 and lattice(δ) = λ · rotation · lattice(δ').
fn reduce(delta: f64) -> Result<(f64, f64)> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidDelta(delta));
    }
    if delta > 1.0 {
        Ok((1.0 / delta, delta))
    } else {
        Ok((delta, 1.0))
    }
}

fn angle(radius: f64, r: f64) -> f64 {
    if r <= radius {
        0.0
    } else {
        2.0 * (radius / r).min(1.0).acos()
    }
}

/// Central angles `(Θ₁, Θ₂)` of the chords cut by the type-1 and type-2
/// bisectors; zero while the disk does not reach the bisector.
pub fn segment_angles(delta: f64, r: f64) -> Result<(f64, f64)> {
    check_radius(r)?;
    let (d, scale) = reduce(delta)?;
    let c = critical_radii_2d(d)?;
    let r = r / scale;
    Ok((angle(c.r1, r), angle(c.r2, r)))
}

/// Area of `V ∩ B_r` for the planar lattice with distortion `δ`.
pub fn voronoi_ball_area(delta: f64, r: f64) -> Result<f64> {
    check_radius(r)?;
    let (d, scale) = reduce(delta)?;
    let c = critical_radii_2d(d)?;
    let rr = r / scale;
    let area = if rr <= c.packing() {
        PI * rr * rr
    } else if rr < c.r3 {
        let t1 = angle(c.r1, rr);
        let t2 = angle(c.r2, rr);
        rr * rr * (PI - 2.0 * t1 - t2 + 2.0 * t1.sin() + t2.sin())
    } else {
        d
    };
    Ok(area * scale * scale)
}

/// Volume-based overlap `density − union` in the plane.
pub fn vol_overlap_2d(delta: f64, r: f64) -> Result<f64> {
    check_radius(r)?;
    let (d, scale) = reduce(delta)?;
    let c = critical_radii_2d(d)?;
    let rr = r / scale;
    let overlap = if rr <= c.packing() {
        0.0
    } else if rr < c.r3 {
        let t1 = angle(c.r1, rr);
        let t2 = angle(c.r2, rr);
        rr * rr / d * (2.0 * t1 + t2 - 2.0 * t1.sin() - t2.sin())
    } else {
        PI * rr * rr / d - 1.0
    };
    Ok(overlap)
}

/// Overlap reached exactly at the covering radius, `π(δ² + 1)²/(8δ) − 1` for
/// `δ ≤ 1` (invariant under `δ → 1/δ`).
pub fn overlap_at_covering_2d(delta: f64) -> Result<f64> {
    let (d, _) = reduce(delta)?;
    Ok(PI * (d * d + 1.0).powi(2) / (8.0 * d) - 1.0)
}

/// Largest radius with `vol_overlap_2d(δ, r) ≤ ω`.
pub fn radius_for_overlap_2d(delta: f64, omega: f64) -> Result<f64> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::OmegaDomain {
            omega,
            measure: "volume overlap",
        });
    }
    let (d, scale) = reduce(delta)?;
    let c = critical_radii_2d(d)?;
    let cover = overlap_at_covering_2d(d)?;
    let r = if omega >= cover {
        (d * (1.0 + omega) / PI).sqrt()
    } else {
        bisect_last_below(|r| vol_overlap_2d(d, r), omega, c.packing(), c.r3, 1e-15)?
    };
    Ok(r * scale)
}

/// Which closed form of `∂ density(δ, r(δ, ω)) / ∂δ` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DerivativeBranch {
    /// `r₂ ≤ r ≤ r₁`, `0 < δ < 1/√3`: only the two type-2 segments are cut.
    TypeTwoOnly,
    /// `r₁ ≤ r ≤ r₂`, `1/√3 < δ < 1`: only the four type-1 segments are cut.
    TypeOneOnly,
    /// `max(r₁, r₂) ≤ r ≤ r₃`: all six segments are cut.
    AllSegments,
}

/// Derivative of the relaxed packing density with respect to `δ` along the
/// level set `vol_overlap(δ, r) = ω`, for `0 < δ < 1` and
/// `0 ≤ ω ≤ vol_overlap(δ, r₃)`.
pub fn density_derivative_2d(delta: f64, omega: f64) -> Result<f64> {
    Ok(density_derivative_2d_branch(delta, omega)?.1)
}

/// Like [`density_derivative_2d`], also returning the branch used.
pub fn density_derivative_2d_branch(delta: f64, omega: f64) -> Result<(DerivativeBranch, f64)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfBranch {
            delta,
            r: f64::NAN,
        });
    }
    let cover = overlap_at_covering_2d(delta)?;
    if !(omega >= 0.0 && omega <= cover) {
        return Err(Error::OutOfBranch {
            delta,
            r: f64::NAN,
        });
    }
    let r = radius_for_overlap_2d(delta, omega)?;
    density_derivative_2d_at_radius(delta, r)
}

/// The derivative expressed through the radius `r = r(δ, ω)` directly.
pub fn density_derivative_2d_at_radius(delta: f64, r: f64) -> Result<(DerivativeBranch, f64)> {
    let out = Error::OutOfBranch { delta, r };
    if !(delta > 0.0 && delta < 1.0) || !r.is_finite() {
        return Err(out);
    }
    let c = critical_radii_2d(delta)?;
    let eps = 1e-12 * c.r3;
    let lo = c.r1.min(c.r2);
    let hi = c.r1.max(c.r2);
    if r < lo - eps || r > c.r3 + eps {
        return Err(out);
    }
    let r = r.clamp(lo, c.r3);
    let d2 = delta * delta;
    let s = (d2 + 1.0).sqrt();
    let hex = 1.0 / 3f64.sqrt();

    let branch = if r <= hi && delta < hex {
        DerivativeBranch::TypeTwoOnly
    } else if r <= hi && delta > hex {
        DerivativeBranch::TypeOneOnly
    } else {
        DerivativeBranch::AllSegments
    };

    // √(2r² − δ²) = √2·r·sin(Θ₂/2) and √(8r² − δ² − 1) = 2√2·r·sin(Θ₁/2).
    let a = (2.0 * r * r - d2).max(0.0).sqrt();
    let b = (8.0 * r * r - d2 - 1.0).max(0.0).sqrt();
    let acos1 = (c.r1 / r).min(1.0).acos();
    let acos2 = (c.r2 / r).min(1.0).acos();

    let value = match branch {
        DerivativeBranch::TypeTwoOnly => {
            if acos2 == 0.0 {
                // r = r₂: limit of √(2r² − δ²)/arccos(r₂/r) is δ.
                PI / 2.0
            } else {
                PI * a / (2.0 * delta * acos2)
            }
        }
        DerivativeBranch::TypeOneOnly => {
            if acos1 == 0.0 {
                // r = r₁: limit of √(8r² − δ² − 1)/arccos(r₁/r) is √(δ² + 1).
                PI * (d2 - 1.0) / (8.0 * d2)
            } else {
                PI * (d2 - 1.0) * b / (8.0 * d2 * s * acos1)
            }
        }
        DerivativeBranch::AllSegments => {
            let denom = 4.0 * d2 * s * (2.0 * acos1 + acos2);
            if denom == 0.0 {
                return Err(out);
            }
            PI * ((d2 - 1.0) * b + 2.0 * delta * s * a) / denom
        }
    };
    Ok((branch, value))
}

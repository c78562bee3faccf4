//! Relaxed packing and covering quality, and optimization over `δ`.
//!
//! A quality evaluation first finds the extreme radius allowed by the
//! constraint and then reports the density at that radius.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::DistortedLattice;
use crate::measures::{Constraint, LatticeMeasures, OverlapMeasure};
use crate::numeric::{bisect_last_below, golden_section_max, lin_space, log_space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityMode {
    /// Largest density with overlap at most `ω`.
    Packing,
    /// Smallest density with free space at most `ω`.
    Covering,
}

impl QualityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            QualityMode::Packing => "packing",
            QualityMode::Covering => "covering",
        }
    }
}

impl fmt::Display for QualityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QualityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "packing" => Ok(QualityMode::Packing),
            "covering" => Ok(QualityMode::Covering),
            _ => Err(Error::Parse {
                kind: "quality mode",
                value: s.to_string(),
            }),
        }
    }
}

/// One evaluation of a quality functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityResult {
    pub delta: f64,
    pub omega: f64,
    pub r: f64,
    pub density: f64,
    /// `None` when the union has no closed form at this radius.
    pub union: Option<f64>,
    /// Value of the constraint function at `r`.
    pub overlap: f64,
    pub mode: QualityMode,
    pub measure: &'static str,
}

fn check_omega(omega: f64, c: Constraint) -> Result<()> {
    let ok = omega.is_finite()
        && omega >= 0.0
        && (c != Constraint::Overlap(OverlapMeasure::Distance) || omega < 1.0);
    if ok {
        Ok(())
    } else {
        Err(Error::OmegaDomain {
            omega,
            measure: c.as_str(),
        })
    }
}

/// Largest radius whose overlap does not exceed `ω`.
pub fn max_radius_for_overlap(m: &LatticeMeasures, measure: OverlapMeasure, omega: f64) -> Result<f64> {
    check_omega(omega, Constraint::Overlap(measure))?;
    let lat = m.lattice();
    match measure {
        OverlapMeasure::Distance => Ok(lat.shortest_vector_norm() / (2.0 * (1.0 - omega))),
        OverlapMeasure::Volume => {
            let packing = lat.packing_radius();
            if omega == 0.0 {
                return Ok(packing);
            }
            let cover = lat.covering_radius();
            // Beyond the covering radius the union is 1 and the overlap is density − 1.
            if omega >= m.density(cover)? - 1.0 {
                let n = lat.dim() as f64;
                let unit = m.density(1.0)? * lat.delta();
                return Ok((lat.delta() * (1.0 + omega) / unit).powf(1.0 / n));
            }
            bisect_last_below(
                |r| Ok(m.density(r)? - m.union_exact(r)?),
                omega,
                packing,
                cover,
                1e-14 * cover,
            )
        }
    }
}

/// Relaxed packing quality.
pub fn qual_packing(lat: &DistortedLattice, measure: OverlapMeasure, omega: f64) -> Result<QualityResult> {
    qual_packing_with(&LatticeMeasures::new(lat)?, measure, omega)
}

pub fn qual_packing_with(m: &LatticeMeasures, measure: OverlapMeasure, omega: f64) -> Result<QualityResult> {
    let r = max_radius_for_overlap(m, measure, omega)?;
    let density = m.density(r)?;
    let union = m.union_exact(r).ok();
    let overlap = match measure {
        OverlapMeasure::Distance => m.dist_overlap(r)?,
        OverlapMeasure::Volume => density - union.unwrap_or(f64::NAN),
    };
    Ok(QualityResult {
        delta: m.lattice().delta(),
        omega,
        r,
        density,
        union,
        overlap: overlap.max(0.0),
        mode: QualityMode::Packing,
        measure: measure.as_str(),
    })
}

/// Relaxed covering quality: the density at `R_cov/(1 + ω)`, the smallest
/// radius whose free space does not exceed `ω`.
pub fn qual_covering(lat: &DistortedLattice, omega: f64) -> Result<QualityResult> {
    check_omega(omega, Constraint::FreeSpace)?;
    let m = LatticeMeasures::new(lat)?;
    let r = lat.covering_radius() / (1.0 + omega);
    Ok(QualityResult {
        delta: lat.delta(),
        omega,
        r,
        density: m.density(r)?,
        union: m.union_exact(r).ok(),
        overlap: m.free_space(r)?,
        mode: QualityMode::Covering,
        measure: Constraint::FreeSpace.as_str(),
    })
}

/// Optimization problem over `δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityQuery {
    pub n: usize,
    pub mode: QualityMode,
    /// Ignored in covering mode.
    pub measure: OverlapMeasure,
    pub omega: f64,
    pub delta_range: (f64, f64),
    /// Number of log-spaced scan points.
    pub scan_points: usize,
}

impl QualityQuery {
    pub fn packing(n: usize, measure: OverlapMeasure, omega: f64, lo: f64, hi: f64) -> Self {
        QualityQuery {
            n,
            mode: QualityMode::Packing,
            measure,
            omega,
            delta_range: (lo, hi),
            scan_points: 400,
        }
    }

    pub fn covering(n: usize, omega: f64, lo: f64, hi: f64) -> Self {
        QualityQuery {
            n,
            mode: QualityMode::Covering,
            measure: OverlapMeasure::Distance,
            omega,
            delta_range: (lo, hi),
            scan_points: 400,
        }
    }

    pub fn evaluate(&self, delta: f64) -> Result<QualityResult> {
        let lat = DistortedLattice::new(self.n, delta)?;
        match self.mode {
            QualityMode::Packing => qual_packing(&lat, self.measure, self.omega),
            QualityMode::Covering => qual_covering(&lat, self.omega),
        }
    }

    // Maximized by the optimizer.
    fn objective(&self, delta: f64) -> Result<f64> {
        let q = self.evaluate(delta)?;
        Ok(match self.mode {
            QualityMode::Packing => q.density,
            QualityMode::Covering => -q.density,
        })
    }
}

/// Outcome of [`optimize_delta`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimum {
    pub best: QualityResult,
    /// Every local optimum within `1e-9` of the best value, sorted by `δ`.
    pub ties: Vec<QualityResult>,
    /// Interval on which the optimal value is attained, when it is not isolated.
    pub plateau: Option<(f64, f64)>,
}

// (δ, objective, plateau)
type Candidate = (f64, f64, Option<(f64, f64)>);

/// Coarse log-spaced scan followed by golden-section refinement of every
/// local optimum.
pub fn optimize_delta(query: &QualityQuery) -> Result<Optimum> {
    let (lo, hi) = query.delta_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || query.scan_points < 3 {
        return Err(Error::EmptyRange { lo, hi });
    }
    let xs = log_space(lo, hi, query.scan_points);
    let ys: Vec<f64> = xs
        .par_iter()
        .map(|&x| query.objective(x))
        .collect::<Result<_>>()?;
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);

    // Runs of equal scan values, kept if both outside neighbours are lower.
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut a = 0;
    while a < xs.len() {
        let mut b = a;
        while b + 1 < xs.len() && same(ys[b], ys[b + 1]) {
            b += 1;
        }
        let left_ok = a == 0 || ys[a - 1] < ys[a];
        let right_ok = b + 1 == xs.len() || ys[b + 1] < ys[b];
        if left_ok && right_ok {
            let bl = xs[a.saturating_sub(1)];
            let br = xs[(b + 1).min(xs.len() - 1)];
            if a == b {
                let (x, y) = golden_section_max(|x| query.objective(x), bl, br, 1e-10 * xs[a])?;
                let (x, y) = if y >= ys[a] { (x, y) } else { (xs[a], ys[a]) };
                candidates.push((x, y, None));
            } else {
                let level = ys[a];
                let at_level = |x: f64| -> Result<bool> { Ok(query.objective(x)? >= level - 1e-12 * level.abs().max(1.0)) };
                let left = if a == 0 { xs[0] } else { edge(&at_level, xs[a - 1], xs[a])? };
                let right = if b + 1 == xs.len() { xs[b] } else { edge(&at_level, xs[b + 1], xs[b])? };
                let mid = (left * right).sqrt();
                candidates.push((mid, query.objective(mid)?, Some((left, right))));
            }
        }
        a = b + 1;
    }

    let best_value = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let mut ties: Vec<Candidate> = candidates
        .into_iter()
        .filter(|c| c.1 >= best_value - 1e-9)
        .collect();
    ties.sort_by(|p, q| p.0.total_cmp(&q.0));
    let best_index = ties
        .iter()
        .enumerate()
        .max_by(|p, q| p.1 .1.total_cmp(&q.1 .1))
        .map(|(i, _)| i)
        .ok_or(Error::EmptyRange { lo, hi })?;
    let plateau = ties[best_index].2;
    let results = ties
        .iter()
        .map(|c| query.evaluate(c.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(Optimum {
        best: results[best_index].clone(),
        ties: results,
        plateau,
    })
}

// Boundary between `outside` (predicate false) and `inside` (true).
fn edge<P>(pred: &P, mut outside: f64, mut inside: f64) -> Result<f64>
where
    P: Fn(f64) -> Result<bool>,
{
    for _ in 0..200 {
        let mid = 0.5 * (outside + inside);
        if (outside - inside).abs() <= 1e-13 * inside.abs() || mid == outside || mid == inside {
            break;
        }
        if pred(mid)? {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(inside)
}

/// Where two lattices exchange relaxed packing optimality under the volume
/// measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossover {
    pub omega: f64,
    pub quality_a: f64,
    pub quality_b: f64,
    pub sign_changes: usize,
}

/// The `ω` in `omega_range` where `qual_packing(δ_a) = qual_packing(δ_b)`
/// under the volume measure. The difference must change sign exactly once
/// on a grid of `grid` points.
pub fn crossover_omega(
    n: usize,
    delta_a: f64,
    delta_b: f64,
    omega_range: (f64, f64),
    grid: usize,
) -> Result<Crossover> {
    let (lo, hi) = omega_range;
    if !(hi > lo && lo >= 0.0) || grid < 2 {
        return Err(Error::EmptyRange { lo, hi });
    }
    let ma = LatticeMeasures::new(&DistortedLattice::new(n, delta_a)?)?;
    let mb = LatticeMeasures::new(&DistortedLattice::new(n, delta_b)?)?;
    let diff = |w: f64| -> Result<f64> {
        Ok(qual_packing_with(&mb, OverlapMeasure::Volume, w)?.density
            - qual_packing_with(&ma, OverlapMeasure::Volume, w)?.density)
    };
    let ws = lin_space(lo, hi, grid);
    let ds: Vec<f64> = ws.iter().map(|&w| diff(w)).collect::<Result<_>>()?;
    let signs: Vec<(usize, f64)> = ds
        .iter()
        .enumerate()
        .filter(|(_, d)| **d != 0.0)
        .map(|(i, d)| (i, d.signum()))
        .collect();
    let changes: Vec<(usize, usize)> = signs
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| (w[0].0, w[1].0))
        .collect();
    if changes.len() != 1 {
        return Err(Error::SignChanges(changes.len()));
    }
    let (i, j) = changes[0];
    let (mut a, mut b) = (ws[i], ws[j]);
    let sa = ds[i].signum();
    while b - a > 1e-10 {
        let mid = 0.5 * (a + b);
        let d = diff(mid)?;
        if d == 0.0 {
            a = mid;
            b = mid;
        } else if d.signum() == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    let omega = 0.5 * (a + b);
    Ok(Crossover {
        omega,
        quality_a: qual_packing_with(&ma, OverlapMeasure::Volume, omega)?.density,
        quality_b: qual_packing_with(&mb, OverlapMeasure::Volume, omega)?.density,
        sign_changes: 1,
    })
}

//! Density, union and the overlap measures of a lattice sphere arrangement.
//!
//! Union and volume overlap are exact in dimensions 2 and 3 and whenever the
//! radius is outside the band between packing and covering radius. Elsewhere
//! they come from the Monte Carlo oracle, and only if a budget was supplied.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{check_radius, Error, Result};
use crate::geometry2d::voronoi_ball_area;
use crate::geometry3d::CapArrangement;
use crate::lattice::{unit_ball_volume, DistortedLattice};
use crate::oracle::{mc_union, McEstimate};

/// Which overlap constraint a relaxed packing uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMeasure {
    /// `(2r − λ₁)/(2r)` with `λ₁` the shortest vector norm.
    Distance,
    /// `density − union`.
    Volume,
}

impl OverlapMeasure {
    pub fn as_str(self) -> &'static str {
        match self {
            OverlapMeasure::Distance => "dist",
            OverlapMeasure::Volume => "vol",
        }
    }
}

impl fmt::Display for OverlapMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OverlapMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dist" | "distance" => Ok(OverlapMeasure::Distance),
            "vol" | "volume" => Ok(OverlapMeasure::Volume),
            _ => Err(Error::Parse {
                kind: "overlap measure",
                value: s.to_string(),
            }),
        }
    }
}

/// Constraint functions shared by relaxed packing and relaxed covering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Constraint {
    Overlap(OverlapMeasure),
    FreeSpace,
}

impl Constraint {
    pub fn as_str(self) -> &'static str {
        match self {
            Constraint::Overlap(m) => m.as_str(),
            Constraint::FreeSpace => "free_space",
        }
    }
}

/// A value that is either exact or a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Estimate {
    Exact { value: f64 },
    MonteCarlo { estimate: McEstimate },
}

impl Estimate {
    pub fn value(&self) -> f64 {
        match self {
            Estimate::Exact { value } => *value,
            Estimate::MonteCarlo { estimate } => estimate.mean,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Estimate::Exact { .. })
    }
}

/// Samples and seed for oracle-backed evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleBudget {
    pub samples: u64,
    pub seed: u64,
}

/// Measure evaluator for one lattice; caches the 3D cell structure.
#[derive(Debug, Clone)]
pub struct LatticeMeasures {
    lattice: DistortedLattice,
    arrangement: Option<CapArrangement>,
    budget: Option<OracleBudget>,
    ball_volume: f64,
}

impl LatticeMeasures {
    pub fn new(lattice: &DistortedLattice) -> Result<Self> {
        let arrangement = if lattice.dim() == 3 {
            Some(CapArrangement::new(lattice.delta())?)
        } else {
            None
        };
        Ok(LatticeMeasures {
            lattice: lattice.clone(),
            arrangement,
            budget: None,
            ball_volume: unit_ball_volume(lattice.dim())?,
        })
    }

    /// Allow the oracle where no closed form exists.
    pub fn with_oracle(mut self, budget: OracleBudget) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn lattice(&self) -> &DistortedLattice {
        &self.lattice
    }

    pub fn arrangement(&self) -> Option<&CapArrangement> {
        self.arrangement.as_ref()
    }

    pub fn budget(&self) -> Option<OracleBudget> {
        self.budget
    }

    pub fn density(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.ball_volume * r.powi(self.lattice.dim() as i32) / self.lattice.delta())
    }

    /// Exact union if available without sampling.
    pub fn union_exact(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        let lat = &self.lattice;
        let delta = lat.delta();
        if r <= lat.packing_radius() {
            return self.density(r);
        }
        if r >= lat.covering_radius() {
            return Ok(1.0);
        }
        let u = match (lat.dim(), &self.arrangement) {
            (2, _) => voronoi_ball_area(delta, r)? / delta,
            (3, Some(arr)) => arr.ball_volume(r)? / delta,
            (n, _) => return Err(Error::UnsupportedExact(n)),
        };
        Ok(u.clamp(0.0, 1.0))
    }

    /// Fraction of space covered by at least one ball.
    pub fn union(&self, r: f64) -> Result<Estimate> {
        match self.union_exact(r) {
            Ok(value) => Ok(Estimate::Exact { value }),
            Err(Error::UnsupportedExact(n)) => {
                let b = self.budget.ok_or(Error::UnsupportedExact(n))?;
                Ok(Estimate::MonteCarlo {
                    estimate: mc_union(&self.lattice, r, b.samples, b.seed)?,
                })
            }
            Err(e) => Err(e),
        }
    }

    pub fn vol_overlap(&self, r: f64) -> Result<Estimate> {
        let density = self.density(r)?;
        Ok(match self.union(r)? {
            Estimate::Exact { value } => Estimate::Exact {
                value: (density - value).max(0.0),
            },
            Estimate::MonteCarlo { estimate } => Estimate::MonteCarlo {
                estimate: McEstimate {
                    mean: density - estimate.mean,
                    ..estimate
                },
            },
        })
    }

    pub fn dist_overlap(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        if r == 0.0 {
            return Err(Error::UndefinedRatio);
        }
        let svn = self.lattice.shortest_vector_norm();
        Ok(((2.0 * r - svn) / (2.0 * r)).max(0.0))
    }

    pub fn free_space(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        if r == 0.0 {
            return Err(Error::UndefinedRatio);
        }
        Ok(((self.lattice.covering_radius() - r) / r).max(0.0))
    }

    pub fn constraint(&self, c: Constraint, r: f64) -> Result<f64> {
        match c {
            Constraint::Overlap(OverlapMeasure::Distance) => self.dist_overlap(r),
            Constraint::Overlap(OverlapMeasure::Volume) => Ok(self.vol_overlap(r)?.value()),
            Constraint::FreeSpace => self.free_space(r),
        }
    }

    /// All measures at radius `r > 0`. With an oracle budget the Monte Carlo
    /// union is attached as well, even where a closed form exists.
    pub fn report(&self, r: f64) -> Result<MeasureReport> {
        let density = self.density(r)?;
        let union = self.union(r)?;
        let oracle = match (union, self.budget) {
            (Estimate::MonteCarlo { estimate }, _) => Some(estimate),
            (Estimate::Exact { .. }, Some(b)) => Some(mc_union(&self.lattice, r, b.samples, b.seed)?),
            _ => None,
        };
        Ok(MeasureReport {
            delta: self.lattice.delta(),
            n: self.lattice.dim(),
            r,
            density,
            union: union.value(),
            dist_overlap: self.dist_overlap(r)?,
            vol_overlap: density - union.value(),
            free_space: self.free_space(r)?,
            exact: union.is_exact(),
            oracle,
        })
    }
}

/// One row of measures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureReport {
    pub delta: f64,
    pub n: usize,
    pub r: f64,
    pub density: f64,
    pub union: f64,
    pub dist_overlap: f64,
    pub vol_overlap: f64,
    pub free_space: f64,
    /// Whether `union` and `vol_overlap` are closed-form values.
    pub exact: bool,
    pub oracle: Option<McEstimate>,
}

pub fn density(lat: &DistortedLattice, r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(unit_ball_volume(lat.dim())? * r.powi(lat.dim() as i32) / lat.delta())
}

/// Exact union; dimensions above 3 are supported only outside the band
/// between packing and covering radius.
pub fn union_fraction(lat: &DistortedLattice, r: f64) -> Result<f64> {
    LatticeMeasures::new(lat)?.union_exact(r)
}

pub fn dist_overlap(lat: &DistortedLattice, r: f64) -> Result<f64> {
    check_radius(r)?;
    if r == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(((2.0 * r - lat.shortest_vector_norm()) / (2.0 * r)).max(0.0))
}

pub fn vol_overlap(lat: &DistortedLattice, r: f64) -> Result<f64> {
    let m = LatticeMeasures::new(lat)?;
    Ok((m.density(r)? - m.union_exact(r)?).max(0.0))
}

pub fn free_space(lat: &DistortedLattice, r: f64) -> Result<f64> {
    check_radius(r)?;
    if r == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(((lat.covering_radius() - r) / r).max(0.0))
}
